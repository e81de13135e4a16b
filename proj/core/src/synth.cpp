#include "streamfuse/synth.hpp"

#include <cmath>

#include "streamfuse/errors.hpp"
#include "streamfuse/rng.hpp"

namespace streamfuse {

Dataset synth_stream(const SynthSpec& spec) {
    if (spec.n < 1) throw Error("synth_stream: n must be >= 1");
    if (spec.blobs.empty()) throw Error("synth_stream: need at least one blob");
    int max_class = 0;
    for (const BlobSpec& blob : spec.blobs) {
        if (blob.center.size() != spec.dims) {
            throw DimensionError("synth_stream blob center", spec.dims, blob.center.size());
        }
        if (blob.drift.size() != 0 && blob.drift.size() != spec.dims) {
            throw DimensionError("synth_stream blob drift", spec.dims, blob.drift.size());
        }
        if (!(blob.sigma > 0.0)) throw Error("synth_stream: sigma must be > 0");
        if (!(blob.drift_end > 0.0 && blob.drift_end <= 1.0)) {
            throw Error("synth_stream: drift_end must be in (0,1]");
        }
        if (blob.class_label < 0) throw Error("synth_stream: negative class label");
        max_class = std::max(max_class, blob.class_label);
    }

    Dataset ds;
    ds.num_classes = max_class + 1;
    ds.X.resize(spec.n, spec.dims);
    ds.labels.resize(static_cast<std::size_t>(spec.n));
    for (long c = 0; c < spec.dims; ++c) ds.feature_names.push_back("f" + std::to_string(c));
    for (long c = 0; c < ds.num_classes; ++c) ds.label_names.push_back(std::to_string(c));

    Rng rng(spec.seed);
    const double denom = spec.n > 1 ? static_cast<double>(spec.n - 1) : 1.0;
    for (std::int64_t i = 0; i < spec.n; ++i) {
        if (spec.outlier_fraction > 0.0 && rng.uniform() < spec.outlier_fraction) {
            for (long c = 0; c < spec.dims; ++c) {
                ds.X(i, c) = rng.uniform(-spec.outlier_box, spec.outlier_box);
            }
            ds.labels[static_cast<std::size_t>(i)] =
                static_cast<int>(rng.below(static_cast<std::uint64_t>(ds.num_classes)));
            continue;
        }
        const auto& blob =
            spec.blobs[static_cast<std::size_t>(rng.below(spec.blobs.size()))];
        const double phase = static_cast<double>(i) / denom;
        const double progress = std::min(phase / blob.drift_end, 1.0);
        for (long c = 0; c < spec.dims; ++c) {
            double mean = blob.center[c];
            if (blob.drift.size() == spec.dims) mean += progress * blob.drift[c];
            ds.X(i, c) = mean + blob.sigma * rng.normal();
        }
        ds.labels[static_cast<std::size_t>(i)] = blob.class_label;
    }
    return ds;
}

namespace {

Vector axis_point(long dims, double x0, double x1 = 0.0) {
    Vector v = Vector::Zero(dims);
    v[0] = x0;
    if (dims > 1) v[1] = x1;
    return v;
}

}  // namespace

SynthSpec preset_separable(long dims, std::int64_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.dims = dims;
    spec.n = n;
    spec.seed = seed;
    spec.blobs.push_back({axis_point(dims, -3.0), 1.0, 0, {}});
    spec.blobs.push_back({axis_point(dims, 3.0), 1.0, 1, {}});
    return spec;
}

SynthSpec preset_overlapping(long dims, std::int64_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.dims = dims;
    spec.n = n;
    spec.seed = seed;
    spec.blobs.push_back({axis_point(dims, -3.0, 0.0), 1.0, 0, {}});
    spec.blobs.push_back({axis_point(dims, -1.0, 1.5), 1.0, 0, {}});
    spec.blobs.push_back({axis_point(dims, 1.0, -1.5), 1.0, 1, {}});
    spec.blobs.push_back({axis_point(dims, 3.0, 0.0), 1.0, 1, {}});
    return spec;
}

SynthSpec preset_drifting(long dims, std::int64_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.dims = dims;
    spec.n = n;
    spec.seed = seed;
    BlobSpec moving{axis_point(dims, -3.0), 1.0, 0, axis_point(dims, 6.0, 5.0), 0.3};
    spec.blobs.push_back(std::move(moving));
    spec.blobs.push_back({axis_point(dims, 3.0), 1.0, 1, {}});
    return spec;
}

double two_gaussian_bayes_accuracy(double distance) {
    // Error for the midpoint cut between two unit Gaussians: Phi(-d/2).
    const double error = 0.5 * std::erfc(distance / (2.0 * std::sqrt(2.0)));
    return 1.0 - error;
}

}  // namespace streamfuse
