#include "streamfuse/merge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamfuse/errors.hpp"
#include "streamfuse/inference.hpp"

namespace streamfuse {

void MergeConfig::validate() const {
    if (k < 1) throw Error("merge config: k must be >= 1");
    if (!(sim_threshold > 0.0 && sim_threshold < 2.0)) {
        throw Error("merge config: sim_threshold must be positive (>1 disables merging)");
    }
    if (!(pop_fraction >= 0.0 && pop_fraction < 1.0)) {
        throw Error("merge config: pop_fraction must be in [0,1)");
    }
}

WeightedRulePool extract_rules(const InitialModel& initial) {
    if (initial.models.empty()) throw Error("extract_rules: no models");
    WeightedRulePool pool;
    pool.input_dim = initial.models.front().input_dim;
    pool.num_classes = initial.models.front().num_classes;

    std::size_t index = 0;
    for (const Model& model : initial.models) {
        if (model.input_dim != pool.input_dim || model.num_classes != pool.num_classes) {
            throw Error("extract_rules: model " + std::to_string(model.partition_id) +
                        " has incompatible dimensions");
        }
        double total_population = 0.0;
        for (const Rule& rule : model.rules) total_population += rule.population;
        for (const Rule& rule : model.rules) {
            PooledRule pooled;
            pooled.rule = rule;
            pooled.rule.weight = model.training_accuracy;
            pooled.source_partition = model.partition_id;
            pooled.source_accuracy = model.training_accuracy;
            pooled.source_model_population = total_population;
            pooled.pool_index = index++;
            pool.rules.push_back(std::move(pooled));
        }
    }
    return pool;
}

WeightedRulePool remove_low_support(const WeightedRulePool& pool, double pop_fraction) {
    if (pool.rules.empty()) throw Error("remove_low_support: empty pool");
    WeightedRulePool kept;
    kept.input_dim = pool.input_dim;
    kept.num_classes = pool.num_classes;

    // The most populous rule of each source model survives regardless.
    std::vector<std::size_t> anchor;  // indices into pool.rules
    for (std::size_t i = 0; i < pool.rules.size(); ++i) {
        const auto& entry = pool.rules[i];
        auto it = std::find_if(anchor.begin(), anchor.end(), [&](std::size_t a) {
            return pool.rules[a].source_partition == entry.source_partition;
        });
        if (it == anchor.end()) {
            anchor.push_back(i);
        } else if (entry.rule.population > pool.rules[*it].rule.population) {
            *it = i;
        }
    }

    for (std::size_t i = 0; i < pool.rules.size(); ++i) {
        const auto& entry = pool.rules[i];
        const bool is_anchor = std::find(anchor.begin(), anchor.end(), i) != anchor.end();
        const double cutoff = pop_fraction * entry.source_model_population;
        if (is_anchor || entry.rule.population >= cutoff) {
            kept.rules.push_back(entry);
        }
    }
    return kept;
}

DominantSplit select_dominant(const WeightedRulePool& pool, int k) {
    const long o = static_cast<long>(pool.rules.size());
    if (k < 1) throw Error("select_dominant: k must be >= 1");
    if (k > o) {
        throw Error("select_dominant: k=" + std::to_string(k) + " exceeds pool size o=" +
                    std::to_string(o));
    }
    std::vector<std::size_t> order(pool.rules.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = pool.rules[a];
        const auto& rb = pool.rules[b];
        if (ra.rule.weight != rb.rule.weight) return ra.rule.weight > rb.rule.weight;
        if (ra.rule.population != rb.rule.population) {
            return ra.rule.population > rb.rule.population;
        }
        if (ra.source_partition != rb.source_partition) {
            return ra.source_partition < rb.source_partition;
        }
        return ra.pool_index < rb.pool_index;
    });

    DominantSplit split;
    std::vector<bool> is_dominant(pool.rules.size(), false);
    for (int i = 0; i < k; ++i) {
        split.dominant.push_back(pool.rules[order[static_cast<std::size_t>(i)]]);
        is_dominant[order[static_cast<std::size_t>(i)]] = true;
    }
    for (std::size_t i = 0; i < pool.rules.size(); ++i) {
        if (!is_dominant[i]) split.weaker.push_back(pool.rules[i]);
    }
    return split;
}

double hyperplane_similarity(const Rule& d, const Rule& w, long class_column) {
    const long u = d.input_dim();
    if (w.input_dim() != u) {
        throw DimensionError("hyperplane_similarity", u, w.input_dim());
    }
    if (class_column < 0 || class_column >= d.num_classes()) {
        throw Error("hyperplane_similarity: class column out of range");
    }
    // Normal vectors from the non-intercept coefficients, pointing to
    // opposite sides of the target axis.
    Vector a(u + 1);
    Vector b(u + 1);
    a.head(u) = d.consequent.block(1, class_column, u, 1);
    b.head(u) = w.consequent.block(1, class_column, u, 1);
    a[u] = -1.0;
    b[u] = 1.0;
    const double norms = a.norm() * b.norm();
    if (norms == 0.0) return 0.0;
    const double cosine = std::clamp(a.dot(b) / norms, -1.0, 1.0);
    return std::acos(cosine) / M_PI;
}

double hyperplane_similarity(const Rule& d, const Rule& w) {
    const long m = d.num_classes();
    if (w.num_classes() != m) {
        throw DimensionError("hyperplane_similarity classes", m, w.num_classes());
    }
    double total = 0.0;
    for (long c = 0; c < m; ++c) total += hyperplane_similarity(d, w, c);
    return total / static_cast<double>(m);
}

bool blowup_ok(const Rule& d, const Rule& w, const Matrix& merged_inv_dispersion) {
    double merged_volume = 0.0;
    try {
        merged_volume = inv_dispersion_volume(merged_inv_dispersion);
    } catch (const NotPositiveDefiniteError&) {
        return false;
    }
    const double n = static_cast<double>(d.input_dim());
    return merged_volume <= n * (rule_volume(d) + rule_volume(w));
}

Rule merge_pair(const Rule& d, const Rule& w) {
    if (d.input_dim() != w.input_dim() || d.num_classes() != w.num_classes()) {
        throw Error("merge_pair: dimension mismatch");
    }
    const double total = d.population + w.population;
    if (total <= 0.0) throw Error("merge_pair: zero total population");
    const double fd = d.population / total;
    const double fw = w.population / total;

    Rule merged;
    merged.center = fd * d.center + fw * w.center;
    merged.inv_dispersion = fd * d.inv_dispersion + fw * w.inv_dispersion;
    merged.population = total;
    merged.consequent = fd * d.consequent + fw * w.consequent;
    merged.weight = fd * d.weight + fw * w.weight;
    if (d.class_hits.size() == w.class_hits.size() && d.class_hits.size() > 0) {
        merged.class_hits = d.class_hits + w.class_hits;
    } else {
        merged.class_hits = Vector::Zero(d.num_classes());
    }
    return merged;
}

const char* to_string(RuleFate fate) {
    switch (fate) {
        case RuleFate::Dominant: return "dominant";
        case RuleFate::Merged: return "merged";
        case RuleFate::DiscardedLowSimilarity: return "discarded_low_similarity";
        case RuleFate::DiscardedBlowup: return "discarded_blowup";
        case RuleFate::RemovedLowSupport: return "removed_low_support";
    }
    return "unknown";
}

Model run_merge(const WeightedRulePool& pool, const MergeConfig& cfg, MergeReport* report) {
    cfg.validate();
    if (pool.rules.empty()) throw Error("run_merge: empty pool");
    DominantSplit split = select_dominant(pool, cfg.k);

    MergeReport local;
    MergeReport& rep = report ? *report : local;
    rep.pool_size_after_removal = static_cast<long>(pool.rules.size());
    rep.k = cfg.k;
    for (const auto& entry : split.dominant) {
        rep.rules.push_back({entry.pool_index, entry.source_partition, RuleFate::Dominant, -1});
    }

    // Phase 1: assign each Weaker rule to the most similar Dominant rule.
    // Exact similarity ties (duplicated rule sets) fall back to the nearest
    // center, then dominant order, so a duplicate folds into its twin.
    std::vector<std::vector<std::size_t>> assignments(split.dominant.size());
    std::vector<MergeReport::RuleRecord> weaker_records;
    for (std::size_t j = 0; j < split.weaker.size(); ++j) {
        const auto& weak = split.weaker[j];
        double best_sim = -1.0;
        double best_dist = 0.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < split.dominant.size(); ++i) {
            const double sim = hyperplane_similarity(split.dominant[i].rule, weak.rule);
            const double dist =
                (split.dominant[i].rule.center - weak.rule.center).squaredNorm();
            if (sim > best_sim || (sim == best_sim && dist < best_dist)) {
                best_sim = sim;
                best_dist = dist;
                best_i = i;
            }
        }
        MergeReport::RuleRecord record{weak.pool_index, weak.source_partition,
                                       RuleFate::DiscardedLowSimilarity, -1};
        if (best_sim >= cfg.sim_threshold) {
            assignments[best_i].push_back(j);
            record.fate = RuleFate::Merged;  // provisional; blow-up may demote it
            record.merged_into = static_cast<int>(best_i);
            ++rep.assigned;
        } else {
            ++rep.discarded_low_similarity;
        }
        weaker_records.push_back(record);
    }

    // Phase 2: fold each assignment list into its Dominant rule in order.
    std::vector<Rule> merged_rules;
    merged_rules.reserve(split.dominant.size());
    for (std::size_t i = 0; i < split.dominant.size(); ++i) {
        Rule current = split.dominant[i].rule;
        for (std::size_t j : assignments[i]) {
            const Rule& weak = split.weaker[j].rule;
            Rule candidate = merge_pair(current, weak);
            if (blowup_ok(current, weak, candidate.inv_dispersion)) {
                current = std::move(candidate);
                ++rep.merged;
            } else {
                weaker_records[j].fate = RuleFate::DiscardedBlowup;
                weaker_records[j].merged_into = -1;
                ++rep.discarded_blowup;
            }
        }
        merged_rules.push_back(std::move(current));
    }
    rep.rules.insert(rep.rules.end(), weaker_records.begin(), weaker_records.end());

    Model model;
    model.input_dim = pool.input_dim;
    model.num_classes = pool.num_classes;
    model.partition_id = 0;
    model.rules = std::move(merged_rules);

    double population = 0.0;
    double weighted = 0.0;
    for (const Rule& rule : model.rules) {
        population += rule.population;
        weighted += rule.population * rule.weight;
    }
    model.training_accuracy = population > 0.0 ? weighted / population : 0.0;
    return model;
}

}  // namespace streamfuse
