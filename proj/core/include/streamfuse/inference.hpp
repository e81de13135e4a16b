#pragma once

#include "streamfuse/types.hpp"

namespace streamfuse {

/// Squared Mahalanobis distance (x - center)' * inv_dispersion * (x - center).
double mahalanobis_sq(const Rule& rule, const Vector& x);

/// Gaussian activation exp(-0.5 * mahalanobis_sq). In (0, 1]; equals 1
/// exactly at the rule center. Throws DimensionError on length mismatch.
double firing_strength(const Rule& rule, const Vector& x);

/// Firing strengths of every rule in the model at x, in rule order.
Vector firing_strengths(const Model& model, const Vector& x);

/// Normalized firing strengths (sum to 1). Computed with the max-shifted
/// exponent so far-away inputs cannot underflow the normalization.
Vector normalized_firing_strengths(const Model& model, const Vector& x);

/// MIMO inference: scores = sum_i lambda_i * (x_e' W_i) with x_e = (1, x),
/// class = argmax (lowest index on ties). Throws on an empty model or a
/// non-finite feature.
Prediction infer(const Model& model, const Vector& x);

/// Per-class scores only; same contract as infer.
Vector infer_scores(const Model& model, const Vector& x);

/// Ellipsoid volume det(Sigma)^(1/2) = det(inv_dispersion)^(-1/2). The unit
/// ball constant is dropped; callers only ever compare volumes of equal
/// dimension. Throws NotPositiveDefiniteError.
double rule_volume(const Rule& rule);

/// Volume of an inverse dispersion matrix directly (same convention).
double inv_dispersion_volume(const Matrix& inv_dispersion);

}  // namespace streamfuse
