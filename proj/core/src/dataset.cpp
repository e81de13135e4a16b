#include "streamfuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "streamfuse/errors.hpp"
#include "streamfuse/rng.hpp"

namespace streamfuse {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_feature(const std::string& token, double& out) {
    const std::string t = trim(token);
    if (t.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(t, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == t.size();
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw Error("CSV file is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_fields(line);
    if (header.size() < 2) throw ParseError(path + ": need at least one feature and a label");

    long label_col = -1;
    if (!options.label.name.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == options.label.name) {
                label_col = static_cast<long>(i);
                break;
            }
        }
        if (label_col < 0) {
            throw Error(path + ": no column named '" + options.label.name + "'");
        }
    } else if (options.label.index >= 0) {
        if (static_cast<std::size_t>(options.label.index) >= header.size()) {
            throw Error(path + ": label column index out of range");
        }
        label_col = options.label.index;
    } else {
        label_col = static_cast<long>(header.size()) - 1;
    }

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (static_cast<long>(i) != label_col) ds.feature_names.push_back(trim(header[i]));
    }
    const long u = static_cast<long>(ds.feature_names.size());

    std::vector<double> values;
    std::vector<std::string> raw_labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_fields(line);

        bool ok = fields.size() == header.size();
        std::vector<double> row(static_cast<std::size_t>(u));
        if (ok) {
            long fi = 0;
            for (std::size_t c = 0; c < fields.size() && ok; ++c) {
                if (static_cast<long>(c) == label_col) continue;
                double value = 0.0;
                ok = parse_feature(fields[c], value) && std::isfinite(value);
                row[static_cast<std::size_t>(fi++)] = value;
            }
        }
        if (!ok) {
            if (options.strict) {
                throw ParseError(path + ": malformed row at line " + std::to_string(line_no));
            }
            ++ds.dropped_rows;
            continue;
        }
        values.insert(values.end(), row.begin(), row.end());
        raw_labels.push_back(trim(fields[static_cast<std::size_t>(label_col)]));
    }
    if (raw_labels.empty()) {
        throw Error(path + ": no usable data rows (dropped " +
                    std::to_string(ds.dropped_rows) + ")");
    }

    // Stable sorted label mapping: class index = rank of the label text.
    std::map<std::string, int> mapping;
    if (options.fixed_label_names.empty()) {
        for (const auto& label : raw_labels) mapping.emplace(label, 0);
        int next = 0;
        for (auto& [text, index] : mapping) index = next++;
    } else {
        for (std::size_t i = 0; i < options.fixed_label_names.size(); ++i) {
            mapping[options.fixed_label_names[i]] = static_cast<int>(i);
        }
    }

    const long n = static_cast<long>(raw_labels.size());
    ds.X.resize(n, u);
    for (long r = 0; r < n; ++r) {
        for (long c = 0; c < u; ++c) {
            ds.X(r, c) = values[static_cast<std::size_t>(r * u + c)];
        }
    }
    ds.labels.reserve(static_cast<std::size_t>(n));
    for (const auto& label : raw_labels) {
        auto it = mapping.find(label);
        if (it == mapping.end()) {
            throw Error(path + ": label '" + label + "' not in the provided label mapping");
        }
        ds.labels.push_back(it->second);
    }
    ds.label_names.resize(mapping.size());
    for (const auto& [text, index] : mapping) {
        ds.label_names[static_cast<std::size_t>(index)] = text;
    }
    ds.num_classes = static_cast<long>(ds.label_names.size());
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    for (long c = 0; c < ds.dims(); ++c) {
        out << (c < static_cast<long>(ds.feature_names.size())
                    ? ds.feature_names[static_cast<std::size_t>(c)]
                    : "f" + std::to_string(c))
            << ',';
    }
    out << "label\n";
    char buf[64];
    for (long r = 0; r < ds.rows(); ++r) {
        for (long c = 0; c < ds.dims(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.X(r, c));
            out << buf << ',';
        }
        const int label = ds.labels[static_cast<std::size_t>(r)];
        if (static_cast<std::size_t>(label) < ds.label_names.size()) {
            out << ds.label_names[static_cast<std::size_t>(label)];
        } else {
            out << label;
        }
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path);
}

NormStats fit_normalization(const Dataset& ds, NormMethod method) {
    if (ds.rows() < 2) throw Error("fit_normalization: need at least 2 rows");
    const long u = ds.dims();
    NormStats stats;
    stats.method = method;
    stats.scale.resize(u);
    stats.offset.resize(u);
    stats.fitted_rows = ds.rows();

    for (long c = 0; c < u; ++c) {
        const auto column = ds.X.col(c);
        if (method == NormMethod::MinMax) {
            const double lo = column.minCoeff();
            const double hi = column.maxCoeff();
            if (hi > lo) {
                stats.scale[c] = 1.0 / (hi - lo);
                stats.offset[c] = -lo / (hi - lo);
            } else {
                stats.scale[c] = 0.0;  // constant feature maps to 0.5
                stats.offset[c] = 0.5;
            }
        } else {
            const double mean = column.mean();
            const double var =
                (column.array() - mean).square().sum() / static_cast<double>(ds.rows() - 1);
            const double sd = std::sqrt(var);
            if (sd > 0.0) {
                stats.scale[c] = 1.0 / sd;
                stats.offset[c] = -mean / sd;
            } else {
                stats.scale[c] = 0.0;
                stats.offset[c] = 0.0;
            }
        }
    }
    return stats;
}

void apply_normalization(Dataset& ds, const NormStats& stats) {
    if (stats.scale.size() != ds.dims()) {
        throw DimensionError("apply_normalization", stats.scale.size(), ds.dims());
    }
    for (long c = 0; c < ds.dims(); ++c) {
        ds.X.col(c) = stats.scale[c] * ds.X.col(c).array() + stats.offset[c];
    }
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("split_train_test: fraction must be in (0,1)");
    }
    const long n_train = std::max<long>(
        1, static_cast<long>(std::llround(train_fraction * static_cast<double>(ds.rows()))));
    if (n_train >= ds.rows()) throw Error("split_train_test: test split is empty");

    auto slice = [&](long begin, long count) {
        Dataset part;
        part.X = ds.X.middleRows(begin, count);
        part.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + begin + count);
        part.feature_names = ds.feature_names;
        part.label_names = ds.label_names;
        part.num_classes = ds.num_classes;
        return part;
    };
    return {slice(0, n_train), slice(n_train, ds.rows() - n_train)};
}

Dataset shuffle_dataset(const Dataset& ds, std::uint64_t seed) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.label_names = ds.label_names;
    out.num_classes = ds.num_classes;
    out.dropped_rows = ds.dropped_rows;

    std::vector<long> order(static_cast<std::size_t>(ds.rows()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<long>(i);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
    out.X.resize(ds.rows(), ds.dims());
    out.labels.resize(static_cast<std::size_t>(ds.rows()));
    for (long r = 0; r < ds.rows(); ++r) {
        out.X.row(r) = ds.X.row(order[static_cast<std::size_t>(r)]);
        out.labels[static_cast<std::size_t>(r)] =
            ds.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    }
    return out;
}

}  // namespace streamfuse
