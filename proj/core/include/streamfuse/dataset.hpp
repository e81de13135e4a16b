#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

/// In-memory labeled dataset. Rows of X are samples in stream order; labels
/// are dense class indices in [0, num_classes).
struct Dataset {
    Matrix X;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;  // dense index -> original label text
    long num_classes = 0;
    std::int64_t dropped_rows = 0;

    long rows() const { return X.rows(); }
    long dims() const { return X.cols(); }
};

/// Which CSV column holds the label. Default: the last column.
struct LabelColumn {
    std::string name;  // wins when non-empty
    int index = -1;    // -1 means "last column"
};

struct CsvOptions {
    LabelColumn label;
    /// Strict mode fails on the first malformed row instead of dropping it.
    bool strict = false;
    /// When non-empty, labels are mapped through this fixed list (position =
    /// class index) and an unknown label is an error. Used so test data
    /// reuses the training mapping.
    std::vector<std::string> fixed_label_names;
};

/// Loads a header-bearing CSV. Rows with unparseable fields or non-finite
/// values are dropped and counted (lenient mode). Label values are mapped to
/// dense indices via a lexicographically sorted mapping recorded in
/// label_names. Throws when no data row survives.
Dataset load_csv(const std::string& path, const CsvOptions& options = {});

void write_csv(const Dataset& ds, const std::string& path);

enum class NormMethod { MinMax, ZScore };

/// Per-feature affine transform x' = scale * x + offset, plus provenance.
struct NormStats {
    NormMethod method = NormMethod::MinMax;
    Vector scale;
    Vector offset;
    std::int64_t fitted_rows = 0;  // provenance: how many rows the fit saw
};

/// Fits normalization statistics. MinMax maps each feature to [0,1]
/// (constant features map to 0.5); ZScore uses the sample standard
/// deviation (constant features map to 0). Needs >= 2 rows.
NormStats fit_normalization(const Dataset& ds, NormMethod method);

/// Applies previously fitted statistics in place (test data must use the
/// training-time stats).
void apply_normalization(Dataset& ds, const NormStats& stats);

/// First `train_fraction` of rows (stream order) for training, the rest for
/// testing.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double train_fraction);

/// Deterministic Fisher-Yates shuffle.
Dataset shuffle_dataset(const Dataset& ds, std::uint64_t seed);

}  // namespace streamfuse
