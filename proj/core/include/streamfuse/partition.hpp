#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "streamfuse/learner.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

/// Contiguous near-equal split of [0, n) preserving stream order.
struct PartitionPlan {
    struct Range {
        std::size_t begin = 0;
        std::size_t end = 0;  // exclusive
        std::size_t size() const { return end - begin; }
    };
    int num_partitions = 1;
    std::vector<Range> ranges;
};

/// Splits n_samples into l contiguous ranges whose sizes differ by at most
/// one, the remainder spread from the front. Throws when l < 1 or
/// l > n_samples.
PartitionPlan make_plan(std::size_t n_samples, int l);

/// The l per-partition models collected after parallel training, plus
/// timing. Models are ordered by partition id.
struct InitialModel {
    std::vector<Model> models;
    std::vector<double> partition_ms;
    double wall_ms = 0.0;

    long total_rules() const {
        long total = 0;
        for (const Model& m : models) total += static_cast<long>(m.rules.size());
        return total;
    }
    std::int64_t samples_seen() const {
        std::int64_t total = 0;
        for (const Model& m : models) total += m.samples_seen;
        return total;
    }
    std::int64_t samples_trained() const {
        std::int64_t total = 0;
        for (const Model& m : models) total += m.samples_trained;
        return total;
    }
};

struct TrainOptions {
    LearnerConfig learner;
    std::optional<ALConfig> al;  // al->seed acts as the base seed
    int parallelism = 1;
};

/// Train every partition with an isolated learner (own AL state, seed =
/// base seed + partition id) on a pool of `parallelism` workers. The result
/// is independent of the parallelism level. Any partition failure fails the
/// whole run, naming the partition and cause.
InitialModel train_all(const Eigen::Ref<const Matrix>& X, std::span<const int> labels,
                       long num_classes, const PartitionPlan& plan,
                       const TrainOptions& options);

/// serialize_model over every model in partition order, concatenated; the
/// byte-comparison form used by the determinism checks.
std::string serialize_initial_model(const InitialModel& initial);

}  // namespace streamfuse
