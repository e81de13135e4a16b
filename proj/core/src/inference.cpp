#include "streamfuse/inference.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "streamfuse/errors.hpp"

namespace streamfuse {

namespace {

// Hot-path scratch. These functions run once per rule per sample in the
// training loop; thread-local buffers keep them allocation-free after
// warmup. Each learner thread owns its own set.
struct Scratch {
    Vector diff;
    Vector tmp;
    Vector xe;
    Vector weights;
};

Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

}  // namespace

double mahalanobis_sq(const Rule& rule, const Vector& x) {
    if (x.size() != rule.center.size()) {
        throw DimensionError("mahalanobis_sq input", rule.center.size(), x.size());
    }
    Scratch& s = scratch();
    s.diff = x - rule.center;
    s.tmp.noalias() = rule.inv_dispersion * s.diff;
    return s.diff.dot(s.tmp);
}

double firing_strength(const Rule& rule, const Vector& x) {
    const double value = std::exp(-0.5 * mahalanobis_sq(rule, x));
    // Keep the contract value > 0 even when the exponent underflows.
    return std::max(value, std::numeric_limits<double>::min());
}

Vector firing_strengths(const Model& model, const Vector& x) {
    Vector phi(static_cast<long>(model.rules.size()));
    for (std::size_t i = 0; i < model.rules.size(); ++i) {
        phi[static_cast<long>(i)] = firing_strength(model.rules[i], x);
    }
    return phi;
}

Vector normalized_firing_strengths(const Model& model, const Vector& x) {
    const long n = static_cast<long>(model.rules.size());
    Vector lambda(n);
    for (long i = 0; i < n; ++i) {
        lambda[i] = 0.5 * mahalanobis_sq(model.rules[static_cast<std::size_t>(i)], x);
    }
    // exp(-d_i) / sum_j exp(-d_j) against the smallest distance so the
    // denominator never underflows to zero.
    const double d_min = lambda.minCoeff();
    for (long i = 0; i < n; ++i) lambda[i] = std::exp(d_min - lambda[i]);
    lambda /= lambda.sum();
    return lambda;
}

static void check_input(const Model& model, const Vector& x, const char* op) {
    if (model.empty()) throw Error(std::string(op) + ": model has no rules");
    if (x.size() != model.input_dim) {
        throw DimensionError(std::string(op) + " input", model.input_dim, x.size());
    }
    if (!x.allFinite()) throw Error(std::string(op) + ": non-finite input feature");
}

Vector infer_scores(const Model& model, const Vector& x) {
    check_input(model, x, "infer");
    const long n = static_cast<long>(model.rules.size());
    Scratch& s = scratch();

    s.weights.resize(n);
    for (long i = 0; i < n; ++i) {
        s.weights[i] = 0.5 * mahalanobis_sq(model.rules[static_cast<std::size_t>(i)], x);
    }
    const double d_min = s.weights.minCoeff();
    double total = 0.0;
    for (long i = 0; i < n; ++i) {
        s.weights[i] = std::exp(d_min - s.weights[i]);
        total += s.weights[i];
    }

    s.xe.resize(model.input_dim + 1);
    s.xe[0] = 1.0;
    s.xe.tail(model.input_dim) = x;

    Vector scores = Vector::Zero(model.num_classes);
    for (long i = 0; i < n; ++i) {
        scores.noalias() += (s.weights[i] / total) *
                            (model.rules[static_cast<std::size_t>(i)].consequent.transpose() *
                             s.xe);
    }
    return scores;
}

Prediction infer(const Model& model, const Vector& x) {
    Prediction p;
    p.scores = infer_scores(model, x);
    p.class_label = argmax_class(p.scores);
    return p;
}

double inv_dispersion_volume(const Matrix& inv_dispersion) {
    thread_local Eigen::LLT<Matrix> llt;
    llt.compute(inv_dispersion);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("rule_volume");
    }
    // det(S^-1)^(-1/2) = prod(diag(L))^-1, evaluated in log space.
    double log_det_half = 0.0;
    const auto& chol = llt.matrixLLT();
    for (long i = 0; i < chol.rows(); ++i) log_det_half += std::log(chol(i, i));
    return std::exp(-log_det_half);
}

double rule_volume(const Rule& rule) { return inv_dispersion_volume(rule.inv_dispersion); }

}  // namespace streamfuse
