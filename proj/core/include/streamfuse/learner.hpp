#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "streamfuse/active_learning.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

struct LearnerConfig {
    /// Threshold on the growth statistic (nearest-rule Mahalanobis distance
    /// times the volume of a would-be new rule) for spawning a rule.
    double growth_threshold = 3.0;

    /// A mature rule is pruned when its time-averaged normalized firing
    /// contribution falls below this fraction of the mean contribution.
    double prune_fraction = 0.1;

    /// Isotropic inverse dispersion scale for newly spawned rules.
    double init_dispersion_scale = 1.0;

    /// Initial consequent covariance magnitude for recursive least squares.
    double rls_omega = 1e5;

    /// RLS forgetting factor, in (0.9, 1].
    double rls_forgetting = 0.98;

    /// Samples a rule must witness before it becomes prunable.
    int min_age_for_prune = 50;

    /// Throws Error when a field is outside its documented bounds.
    void validate() const;
};

/// Winning-rule adaptation: incremental mean for the center, rank-one
/// Sherman-Morrison update of the inverse dispersion with alpha = 1/(N+1),
/// population incremented by one. The matrix is re-symmetrized after the
/// update; an update that loses positive definiteness is rolled back and
/// only the population increment is kept.
Rule update_winning_rule(const Rule& rule, const Vector& x);

/// Growth statistic: (nearest-rule Mahalanobis distance) * (volume of a new
/// rule with isotropic init dispersion). Infinite for an empty model.
double growth_statistic(const Model& model, const Vector& x, const LearnerConfig& cfg);

/// True when the model is empty or the growth statistic exceeds
/// cfg.growth_threshold.
bool should_grow(const Model& model, const Vector& x, const LearnerConfig& cfg);

/// Locally weighted RLS step on the extended input (1, x) toward a one-hot
/// target, with forgetting. lambda_weight must be in (0,1]. Returns false
/// (and leaves rule/P untouched) when the gain denominator is singular.
bool rls_update(Rule& rule, Matrix& rls_cov, const Vector& x, const Vector& target,
                double lambda_weight, double forgetting);

enum class LearnOutcome { Rejected, SpawnedRule, UpdatedRule };

struct LearnEvent {
    LearnOutcome outcome = LearnOutcome::Rejected;
    std::int64_t rule_id = -1;  // stable creation ordinal of the touched rule
};

/// Single-pass evolving learner. One instance per partition; instances are
/// single-threaded and share nothing, so distinct instances may run in
/// parallel freely.
class EvolvingLearner {
public:
    EvolvingLearner(long input_dim, long num_classes, LearnerConfig cfg = {});

    /// Process one labeled sample: spawn a rule or adapt the winning one,
    /// update the consequent by RLS, then prune. A non-finite sample is
    /// rejected (counted) and leaves the state unchanged.
    LearnEvent learn_one(const Vector& x, int label);

    /// Contribution-based pruning; never removes the last rule. Returns the
    /// number of rules removed.
    int prune_rules();

    const Model& model() const { return model_; }
    long input_dim() const { return model_.input_dim; }
    long num_classes() const { return model_.num_classes; }

    std::int64_t samples_admitted() const { return admitted_; }
    std::int64_t samples_rejected() const { return rejected_; }
    std::int64_t rls_skips() const { return rls_skips_; }
    int rules_pruned() const { return rules_pruned_; }

    /// Total population carried by rules removed by pruning. Together with
    /// the live populations this accounts exactly for every admitted sample.
    double pruned_population() const { return pruned_population_; }

    std::int64_t rule_id(std::size_t index) const { return aux_[index].id; }
    const Matrix& rls_covariance(std::size_t index) const { return aux_[index].rls_cov; }
    std::int64_t rule_age(std::size_t index) const { return aux_[index].age; }
    double rule_contribution(std::size_t index) const { return aux_[index].contribution; }

private:
    struct RuleAux {
        Matrix rls_cov;
        double contribution = 0.0;  // accumulated normalized firing strength
        std::int64_t age = 0;       // samples witnessed since creation
        std::int64_t id = 0;
    };

    void spawn_rule(const Vector& x, int label);

    Model model_;
    LearnerConfig cfg_;
    std::vector<RuleAux> aux_;
    std::int64_t next_rule_id_ = 0;
    std::int64_t admitted_ = 0;
    std::int64_t rejected_ = 0;
    std::int64_t rls_skips_ = 0;
    int rules_pruned_ = 0;
    double pruned_population_ = 0.0;

    // Per-sample scratch, kept across calls to stay allocation-free.
    std::vector<double> scratch_d2_;
    std::vector<double> scratch_avg_;
    Vector one_hot_;
};

struct PartitionTrainResult {
    Model model;
    std::int64_t rejected_rows = 0;
    std::int64_t rls_skips = 0;
    int rules_pruned = 0;
    double final_theta = 0.0;  // AL threshold at end of stream, 0 when AL off
};

/// Train one partition in a single pass. Rows of X are samples; prequential
/// (predict-then-train) accuracy over admitted samples becomes the model's
/// training accuracy and every rule inherits it as its weight. When `al` is
/// present each sample passes through the active-learning filter before
/// learning. Throws when the stream is empty or every sample was rejected.
PartitionTrainResult train_partition(const Eigen::Ref<const Matrix>& X,
                                     std::span<const int> labels, long num_classes,
                                     const LearnerConfig& cfg,
                                     const std::optional<ALConfig>& al,
                                     int partition_id = 0);

}  // namespace streamfuse
