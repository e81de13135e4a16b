#include "streamfuse/learner.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "streamfuse/errors.hpp"
#include "streamfuse/inference.hpp"

namespace streamfuse {

void LearnerConfig::validate() const {
    if (!(growth_threshold > 0.0)) throw Error("learner config: growth_threshold must be > 0");
    if (!(prune_fraction > 0.0 && prune_fraction < 1.0)) {
        throw Error("learner config: prune_fraction must be in (0,1)");
    }
    if (!(init_dispersion_scale > 0.0)) {
        throw Error("learner config: init_dispersion_scale must be > 0");
    }
    if (!(rls_omega > 0.0)) throw Error("learner config: rls_omega must be > 0");
    if (!(rls_forgetting > 0.9 && rls_forgetting <= 1.0)) {
        throw Error("learner config: rls_forgetting must be in (0.9, 1]");
    }
    if (min_age_for_prune < 1) throw Error("learner config: min_age_for_prune must be >= 1");
}

namespace {

struct UpdateScratch {
    Vector diff;
    Vector v;
    Matrix cand;
    Matrix sym;
    Eigen::LLT<Matrix> llt;
    Vector xe;
    Vector px;
    Vector gain;
    Eigen::RowVectorXd err;
};

UpdateScratch& update_scratch() {
    thread_local UpdateScratch s;
    return s;
}

/// Applies the winning-rule adaptation in place. Returns false (population
/// still incremented) when the dispersion update would lose positive
/// definiteness and was rolled back.
bool adapt_winning_rule(Rule& rule, const Vector& x) {
    UpdateScratch& s = update_scratch();
    const double alpha = 1.0 / (rule.population + 1.0);
    s.diff = x - rule.center;

    // Inverse dispersion: Sherman-Morrison form of the recursive covariance
    // S_new = (1-a) S + a (x-c_new)(x-c_old)^T.
    s.v.noalias() = rule.inv_dispersion * s.diff;
    const double q = 1.0 + alpha * s.diff.dot(s.v);
    bool applied = q > std::numeric_limits<double>::min();
    if (applied) {
        s.cand = rule.inv_dispersion;
        s.cand.noalias() -= (alpha / q) * (s.v * s.v.transpose());
        s.cand /= (1.0 - alpha);
        s.sym = 0.5 * (s.cand + s.cand.transpose());
        s.llt.compute(s.sym);
        applied = s.llt.info() == Eigen::Success;
        if (applied) {
            rule.center += alpha * s.diff;
            rule.inv_dispersion = s.sym;
        }
    }
    rule.population += 1.0;
    return applied;
}

double new_rule_volume(long input_dim, const LearnerConfig& cfg) {
    // det(scale * I)^(-1/2)
    return std::pow(cfg.init_dispersion_scale, -0.5 * static_cast<double>(input_dim));
}

double min_mahalanobis_sq(const Model& model, const Vector& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const Rule& rule : model.rules) {
        best = std::min(best, mahalanobis_sq(rule, x));
    }
    return best;
}

}  // namespace

Rule update_winning_rule(const Rule& rule, const Vector& x) {
    if (x.size() != rule.center.size()) {
        throw DimensionError("update_winning_rule input", rule.center.size(), x.size());
    }
    Rule updated = rule;
    adapt_winning_rule(updated, x);
    return updated;
}

double growth_statistic(const Model& model, const Vector& x, const LearnerConfig& cfg) {
    if (model.empty()) return std::numeric_limits<double>::infinity();
    return std::sqrt(min_mahalanobis_sq(model, x)) * new_rule_volume(model.input_dim, cfg);
}

bool should_grow(const Model& model, const Vector& x, const LearnerConfig& cfg) {
    if (model.empty()) return true;
    return growth_statistic(model, x, cfg) > cfg.growth_threshold;
}

bool rls_update(Rule& rule, Matrix& rls_cov, const Vector& x, const Vector& target,
                double lambda_weight, double forgetting) {
    if (!(lambda_weight > 0.0 && lambda_weight <= 1.0)) {
        throw Error("rls_update: lambda_weight must be in (0,1]");
    }
    const long u = rule.input_dim();
    if (x.size() != u) throw DimensionError("rls_update input", u, x.size());
    if (target.size() != rule.num_classes()) {
        throw DimensionError("rls_update target", rule.num_classes(), target.size());
    }
    UpdateScratch& s = update_scratch();

    s.xe.resize(u + 1);
    s.xe[0] = 1.0;
    s.xe.tail(u) = x;

    s.px.noalias() = rls_cov * s.xe;
    const double denom = forgetting + lambda_weight * s.xe.dot(s.px);
    if (!std::isfinite(denom) || std::abs(denom) < 1e-12) return false;

    s.gain = (lambda_weight / denom) * s.px;
    s.err = target.transpose();
    s.err.noalias() -= s.xe.transpose() * rule.consequent;
    rule.consequent.noalias() += s.gain * s.err;

    s.cand = rls_cov;
    s.cand.noalias() -= s.gain * (s.xe.transpose() * rls_cov);
    s.cand /= forgetting;
    rls_cov = 0.5 * (s.cand + s.cand.transpose());
    return true;
}

EvolvingLearner::EvolvingLearner(long input_dim, long num_classes, LearnerConfig cfg)
    : cfg_(cfg) {
    if (input_dim < 1) throw Error("learner: input_dim must be >= 1");
    if (num_classes < 2) throw Error("learner: num_classes must be >= 2");
    cfg_.validate();
    model_.input_dim = input_dim;
    model_.num_classes = num_classes;
}

void EvolvingLearner::spawn_rule(const Vector& x, int label) {
    const long u = model_.input_dim;
    const long m = model_.num_classes;
    Rule rule;
    rule.center = x;
    rule.inv_dispersion = cfg_.init_dispersion_scale * Matrix::Identity(u, u);
    rule.population = 1.0;
    rule.consequent = Matrix::Zero(u + 1, m);
    rule.consequent(0, label) = 1.0;  // a fresh rule votes for its creating class
    rule.weight = 1.0;
    rule.class_hits = Vector::Zero(m);
    rule.class_hits[label] = 1.0;
    model_.rules.push_back(std::move(rule));

    RuleAux aux;
    aux.rls_cov = cfg_.rls_omega * Matrix::Identity(u + 1, u + 1);
    aux.id = next_rule_id_++;
    aux_.push_back(std::move(aux));
}

LearnEvent EvolvingLearner::learn_one(const Vector& x, int label) {
    if (x.size() != model_.input_dim) {
        throw DimensionError("learn_one input", model_.input_dim, x.size());
    }
    if (label < 0 || label >= model_.num_classes) {
        throw Error("learn_one: label " + std::to_string(label) + " out of range [0," +
                    std::to_string(model_.num_classes) + ")");
    }
    if (!x.allFinite()) {
        ++rejected_;
        return {LearnOutcome::Rejected, -1};
    }

    // Distances before adaptation drive both the growth test and winner
    // selection.
    const std::size_t n_before = model_.rules.size();
    scratch_d2_.resize(n_before + 1);
    double d2_min = std::numeric_limits<double>::infinity();
    std::size_t winner = 0;
    for (std::size_t i = 0; i < n_before; ++i) {
        scratch_d2_[i] = mahalanobis_sq(model_.rules[i], x);
        if (scratch_d2_[i] < d2_min) {
            d2_min = scratch_d2_[i];
            winner = i;
        }
    }

    LearnEvent event;
    const bool grow =
        model_.rules.empty() ||
        std::sqrt(d2_min) * new_rule_volume(model_.input_dim, cfg_) > cfg_.growth_threshold;
    std::size_t target;
    if (grow) {
        spawn_rule(x, label);
        target = n_before;
        scratch_d2_[target] = 0.0;  // new rule is centered at x
        event = {LearnOutcome::SpawnedRule, aux_.back().id};
    } else {
        Rule& rule = model_.rules[winner];
        adapt_winning_rule(rule, x);
        rule.class_hits[label] += 1.0;
        target = winner;
        scratch_d2_[target] = mahalanobis_sq(rule, x);  // center moved
        event = {LearnOutcome::UpdatedRule, aux_[winner].id};
    }

    // Normalized firing strengths over the adapted rule set, exponent
    // shifted so the normalization cannot underflow.
    const std::size_t n = model_.rules.size();
    double shift = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) shift = std::min(shift, scratch_d2_[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        scratch_d2_[i] = std::exp(0.5 * (shift - scratch_d2_[i]));
        total += scratch_d2_[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        aux_[i].contribution += scratch_d2_[i] / total;
        aux_[i].age += 1;
    }

    if (one_hot_.size() != model_.num_classes) one_hot_ = Vector::Zero(model_.num_classes);
    one_hot_[label] = 1.0;
    if (!rls_update(model_.rules[target], aux_[target].rls_cov, x, one_hot_,
                    scratch_d2_[target] / total, cfg_.rls_forgetting)) {
        ++rls_skips_;
    }
    one_hot_[label] = 0.0;

    ++admitted_;
    prune_rules();
    return event;
}

int EvolvingLearner::prune_rules() {
    const std::size_t n = model_.rules.size();
    if (n <= 1) return 0;

    double mean = 0.0;
    scratch_avg_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        scratch_avg_[i] = aux_[i].contribution / static_cast<double>(aux_[i].age);
        mean += scratch_avg_[i];
    }
    mean /= static_cast<double>(n);

    const double cutoff = cfg_.prune_fraction * mean;
    std::size_t drop_count = 0;
    std::size_t keep_best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (scratch_avg_[i] > scratch_avg_[keep_best]) keep_best = i;
        if (aux_[i].age >= cfg_.min_age_for_prune && scratch_avg_[i] < cutoff) ++drop_count;
    }
    if (drop_count == 0) return 0;

    std::size_t out = 0;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool droppable = aux_[i].age >= cfg_.min_age_for_prune &&
                               scratch_avg_[i] < cutoff &&
                               !(drop_count == n && i == keep_best);
        if (droppable) {
            pruned_population_ += model_.rules[i].population;
            ++dropped;
            continue;
        }
        if (out != i) {
            model_.rules[out] = std::move(model_.rules[i]);
            aux_[out] = std::move(aux_[i]);
        }
        ++out;
    }
    model_.rules.resize(out);
    aux_.resize(out);
    rules_pruned_ += static_cast<int>(dropped);
    return static_cast<int>(dropped);
}

PartitionTrainResult train_partition(const Eigen::Ref<const Matrix>& X,
                                     std::span<const int> labels, long num_classes,
                                     const LearnerConfig& cfg,
                                     const std::optional<ALConfig>& al, int partition_id) {
    if (X.rows() == 0) throw Error("train_partition: empty stream");
    if (static_cast<std::size_t>(X.rows()) != labels.size()) {
        throw DimensionError("train_partition labels", X.rows(),
                             static_cast<long>(labels.size()));
    }

    EvolvingLearner learner(X.cols(), num_classes, cfg);
    std::optional<ALState> al_state;
    if (al) al_state = make_al_state(num_classes, *al);

    std::int64_t seen = 0;
    std::int64_t correct = 0;
    std::int64_t rejected = 0;
    Vector x(X.cols());
    Vector xe(X.cols() + 1);
    xe[0] = 1.0;
    Vector scores(num_classes);
    std::vector<double> d2;

    // One distance scan per sample serves the prequential prediction, the
    // output conflict and the winning-rule purity.
    const auto evaluate = [&](const Model& model) -> std::size_t {
        const std::size_t n = model.rules.size();
        d2.resize(n);
        std::size_t winner = 0;
        double d2_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = mahalanobis_sq(model.rules[i], x);
            if (d2[i] < d2_min) {
                d2_min = d2[i];
                winner = i;
            }
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::exp(0.5 * (d2_min - d2[i]));
            total += d2[i];
        }
        xe.tail(X.cols()) = x;
        scores.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            scores.noalias() += (d2[i] / total) * (model.rules[i].consequent.transpose() * xe);
        }
        return winner;
    };

    for (long row = 0; row < X.rows(); ++row) {
        x = X.row(row);
        if (!x.allFinite()) {
            ++rejected;
            continue;
        }
        ++seen;

        const Model& model = learner.model();
        const bool have_scores = !model.empty();
        std::size_t winner = 0;
        if (have_scores) winner = evaluate(model);

        if (al_state) {
            // Empty model: no opinion, maximal conflict on both spaces.
            double out_conf = 0.0;
            double in_conf = 0.0;
            if (have_scores) {
                out_conf = output_conflict(scores);
                const Vector& hits = model.rules[winner].class_hits;
                const double hit_total = hits.sum();
                in_conf = hit_total > 0.0 ? hits.maxCoeff() / hit_total : 1.0;
            }
            al_state->seen += 1;
            if (!al_state->decide(out_conf, in_conf)) continue;
        }

        // Prequential: score the prediction made before training on the
        // sample. The first admitted sample has no model and counts as a
        // miss.
        if (have_scores && argmax_class(scores) == labels[static_cast<std::size_t>(row)]) {
            ++correct;
        }
        learner.learn_one(x, labels[static_cast<std::size_t>(row)]);
    }

    if (learner.samples_admitted() == 0) {
        throw Error("train_partition: no samples admitted for training (partition " +
                    std::to_string(partition_id) + ")");
    }

    PartitionTrainResult result;
    result.model = learner.model();
    result.model.training_accuracy =
        static_cast<double>(correct) / static_cast<double>(learner.samples_admitted());
    result.model.partition_id = partition_id;
    result.model.samples_seen = seen;
    result.model.samples_trained = learner.samples_admitted();
    for (Rule& rule : result.model.rules) rule.weight = result.model.training_accuracy;
    result.rejected_rows = rejected;
    result.rls_skips = learner.rls_skips();
    result.rules_pruned = learner.rules_pruned();
    result.final_theta = al_state ? al_state->theta : 0.0;
    return result;
}

}  // namespace streamfuse
