#pragma once

#include <cstdint>
#include <vector>

#include "streamfuse/dataset.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

/// One Gaussian component of a synthetic stream.
struct BlobSpec {
    Vector center;
    double sigma = 1.0;
    int class_label = 0;
    /// Total linear shift of the center; a sample at stream phase
    /// p = i / (n-1) sees center + min(p / drift_end, 1) * drift. Empty
    /// means static.
    Vector drift;

    /// Phase at which the drift completes; the blob is stationary after it.
    double drift_end = 1.0;
};

struct SynthSpec {
    long dims = 2;
    std::vector<BlobSpec> blobs;
    std::int64_t n = 1000;
    std::uint64_t seed = 0;
    /// Fraction of samples replaced by uniform noise over a box of this
    /// half-width centered at the origin, labeled with a random class.
    double outlier_fraction = 0.0;
    double outlier_box = 10.0;
};

/// Reproducible Gaussian-mixture stream: each sample picks a blob uniformly,
/// then draws center + sigma * N(0, I). Identical seeds give identical bytes
/// on any platform (mt19937_64 plus explicit Box-Muller).
Dataset synth_stream(const SynthSpec& spec);

/// Two unit blobs at (+/-3, 0, ...), one class each. Bayes accuracy for the
/// planar cut is Phi(3) ~ 0.99865.
SynthSpec preset_separable(long dims, std::int64_t n, std::uint64_t seed);

/// Four blobs, two per class, neighbouring pairs 2 sigma apart so classes
/// overlap noticeably.
SynthSpec preset_overlapping(long dims, std::int64_t n, std::uint64_t seed);

/// Like separable, but the class-0 blob drifts across the initial decision
/// boundary to (+3, 5, 0, ...) over the first half of the stream, then
/// holds its final position.
SynthSpec preset_drifting(long dims, std::int64_t n, std::uint64_t seed);

/// Bayes-optimal accuracy of deciding between two unit-variance Gaussian
/// classes whose means are `distance` apart (error-function oracle).
double two_gaussian_bayes_accuracy(double distance);

}  // namespace streamfuse
