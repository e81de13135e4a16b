#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace streamfuse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One ellipsoidal fuzzy rule: a Gaussian antecedent in arbitrary position
/// plus a MIMO hyperplane consequent.
struct Rule {
    /// Focal point, length u.
    Vector center;

    /// Inverse dispersion matrix, u x u, symmetric positive definite.
    Matrix inv_dispersion;

    /// Number of samples attributed to this rule. >= 1 once created.
    double population = 0.0;

    /// Hyperplane weights, (u+1) x M. Row 0 is the intercept, rows 1..u
    /// multiply the input features. Column m scores class m.
    Matrix consequent;

    /// Confidence in [0,1], inherited from the source model's training
    /// accuracy.
    double weight = 1.0;

    /// Per-class hit counts of samples this rule won during training.
    /// Training-time state used by the active-learning input-conflict
    /// measure; not part of the model file format.
    Vector class_hits;

    long input_dim() const { return center.size(); }
    long num_classes() const { return consequent.cols(); }
};

/// An ordered rule set plus provenance metadata. The unit exchanged between
/// the partition trainer and the aggregators. Immutable once training has
/// finished.
struct Model {
    std::vector<Rule> rules;
    double training_accuracy = 0.0;
    long input_dim = 0;
    long num_classes = 0;
    int partition_id = 0;
    std::int64_t samples_seen = 0;
    std::int64_t samples_trained = 0;

    bool empty() const { return rules.empty(); }
};

/// Output of inference: per-class scores and the winning class.
struct Prediction {
    int class_label = 0;
    Vector scores;
};

/// argmax over a score vector; ties resolved to the lowest index.
inline int argmax_class(const Vector& scores) {
    int best = 0;
    for (int i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

}  // namespace streamfuse
