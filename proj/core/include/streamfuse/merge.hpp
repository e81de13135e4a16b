#pragma once

#include <string>
#include <vector>

#include "streamfuse/partition.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

/// A rule lifted out of its source model, tagged with provenance used by
/// low-support removal and dominant selection.
struct PooledRule {
    Rule rule;  // rule.weight carries the source model's training accuracy
    int source_partition = 0;
    double source_accuracy = 0.0;
    double source_model_population = 0.0;  // total population of the source model
    std::size_t pool_index = 0;            // stable position in the extracted pool
};

struct WeightedRulePool {
    std::vector<PooledRule> rules;
    long input_dim = 0;
    long num_classes = 0;

    std::size_t size() const { return rules.size(); }
};

struct MergeConfig {
    int k = 5;                   // number of Dominant rules
    double sim_threshold = 0.9;  // minimum similarity for a Weaker rule to be assigned
    double pop_fraction = 0.05;  // low-support removal threshold

    void validate() const;
};

/// Step 1-2: concatenate every rule of every model; each rule's weight
/// becomes its source model's training accuracy.
WeightedRulePool extract_rules(const InitialModel& initial);

/// Step 3: drop rules whose population is below pop_fraction of their source
/// model's total population. The most populous rule of each model is always
/// retained so no model loses all representation.
WeightedRulePool remove_low_support(const WeightedRulePool& pool, double pop_fraction);

struct DominantSplit {
    std::vector<PooledRule> dominant;  // k rules, highest weight first
    std::vector<PooledRule> weaker;    // the rest, in pool order
};

/// Step 4: top-k rules by weight; ties broken by larger population, then
/// lower source partition id, then pool order. Throws when k exceeds the
/// pool size.
DominantSplit select_dominant(const WeightedRulePool& pool, int k);

/// Dihedral-angle similarity of the two consequent hyperplanes for one class
/// column: a = (d_1..d_u, -1), b = (w_1..w_u, +1) from the non-intercept
/// coefficients, Sim = arccos(a.b / |a||b|) / pi, in [0,1]. Identical
/// hyperplanes score exactly 1.
double hyperplane_similarity(const Rule& d, const Rule& w, long class_column);

/// Mean of the per-class-column similarities.
double hyperplane_similarity(const Rule& d, const Rule& w);

/// Volume guard: merged volume must not exceed u * (V_d + V_w). False when
/// the merged matrix is not positive definite.
bool blowup_ok(const Rule& d, const Rule& w, const Matrix& merged_inv_dispersion);

/// Population-weighted average of centers, inverse dispersions, consequents
/// and weights; populations add. Caller is responsible for the similarity
/// and blow-up checks.
Rule merge_pair(const Rule& d, const Rule& w);

enum class RuleFate {
    Dominant,
    Merged,
    DiscardedLowSimilarity,
    DiscardedBlowup,
    RemovedLowSupport,
};

const char* to_string(RuleFate fate);

struct MergeReport {
    long pool_size_initial = 0;    // r
    long pool_size_after_removal = 0;  // o
    int k = 0;
    long assigned = 0;
    long merged = 0;
    long discarded_low_similarity = 0;
    long discarded_blowup = 0;
    long removed_low_support = 0;

    struct RuleRecord {
        std::size_t pool_index = 0;
        int source_partition = 0;
        RuleFate fate = RuleFate::Dominant;
        int merged_into = -1;  // dominant slot for Merged rules
    };
    std::vector<RuleRecord> rules;
};

/// Algorithm: assign each Weaker rule to its most similar Dominant rule
/// (discarding below the similarity threshold), then fold each assignment
/// list into its Dominant rule in order, skipping merges that fail the
/// blow-up guard. The result holds exactly k rules; its training accuracy is
/// the population-weighted mean of the final rule weights.
Model run_merge(const WeightedRulePool& pool, const MergeConfig& cfg,
                MergeReport* report = nullptr);

}  // namespace streamfuse
