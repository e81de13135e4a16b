#pragma once

#include <span>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

/// A collection of partition models voting at the model level.
struct Ensemble {
    std::vector<Model> models;
    long input_dim = 0;
    long num_classes = 0;

    std::size_t size() const { return models.size(); }
};

/// Validates dimension compatibility; throws on an empty list.
Ensemble make_ensemble(std::vector<Model> models);

/// Each model votes its argmax class; plurality wins. Scores are vote counts
/// normalized by the ensemble size. Ties are broken by the summed raw scores
/// of the tied classes across all models, then by lowest class index.
Prediction vote(const Ensemble& ensemble, const Vector& x);

/// Mean 0/1 correctness of vote() over all rows. Throws on an empty dataset.
double vote_batch(const Ensemble& ensemble, const Eigen::Ref<const Matrix>& X,
                  std::span<const int> labels);

}  // namespace streamfuse
