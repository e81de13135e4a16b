#include "streamfuse/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "streamfuse/errors.hpp"

namespace streamfuse {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_row(std::string& out, const double* row, long n) {
    for (long j = 0; j < n; ++j) {
        if (j > 0) out += ' ';
        out += fmt_double(row[j]);
    }
    out += '\n';
}

class LineReader {
public:
    explicit LineReader(const std::string& text) : stream_(text) {}

    std::string next(const char* what) {
        std::string line;
        while (std::getline(stream_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return line;
        }
        throw ParseError(std::string("model file ended while reading ") + what);
    }

    bool at_end() {
        std::string line;
        while (std::getline(stream_, line)) {
            ++line_no_;
            if (!line.empty() && line != "\r") {
                pending_ = line;
                return false;
            }
        }
        return true;
    }

    std::string take_pending() {
        std::string out = std::move(pending_);
        pending_.clear();
        return out;
    }

    bool has_pending() const { return !pending_.empty(); }
    int line_no() const { return line_no_; }

private:
    std::istringstream stream_;
    std::string pending_;
    int line_no_ = 0;
};

double parse_double(const std::string& token, const char* what) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("bad float for ") + what + ": '" + token + "'");
    }
    if (pos != token.size()) {
        throw ParseError(std::string("bad float for ") + what + ": '" + token + "'");
    }
    return value;
}

double parse_kv(const std::string& token, const char* key) {
    const std::string prefix = std::string(key) + "=";
    if (token.rfind(prefix, 0) != 0) {
        throw ParseError("expected '" + prefix + "...', got '" + token + "'");
    }
    return parse_double(token.substr(prefix.size()), key);
}

Vector parse_row(const std::string& line, long n, const char* what) {
    std::istringstream in(line);
    Vector row(n);
    std::string token;
    for (long j = 0; j < n; ++j) {
        if (!(in >> token)) {
            throw ParseError(std::string("too few values in ") + what + " row");
        }
        row[j] = parse_double(token, what);
    }
    if (in >> token) {
        throw ParseError(std::string("too many values in ") + what + " row");
    }
    return row;
}

}  // namespace

std::string serialize_model(const Model& model) {
    const long u = model.input_dim;
    const long m = model.num_classes;
    std::string out;
    out += "STREAMFUSE-MODEL v1 u=" + std::to_string(u) + " M=" + std::to_string(m) +
           " acc=" + fmt_double(model.training_accuracy) +
           " partition=" + std::to_string(model.partition_id) + "\n";
    for (const Rule& rule : model.rules) {
        out += "RULE pop=" + fmt_double(rule.population) +
               " weight=" + fmt_double(rule.weight) + "\n";
        out += "C ";
        append_row(out, rule.center.data(), u);
        out += "SINV\n";
        for (long i = 0; i < u; ++i) {
            Vector row = rule.inv_dispersion.row(i);
            append_row(out, row.data(), u);
        }
        out += "W\n";
        for (long i = 0; i < u + 1; ++i) {
            Vector row = rule.consequent.row(i);
            append_row(out, row.data(), m);
        }
    }
    return out;
}

Model parse_model(const std::string& text) {
    LineReader reader(text);

    std::istringstream header(reader.next("header"));
    std::string magic, version, tok_u, tok_m, tok_acc, tok_part;
    header >> magic >> version >> tok_u >> tok_m >> tok_acc >> tok_part;
    if (magic != "STREAMFUSE-MODEL" || version != "v1") {
        throw ParseError("not a STREAMFUSE-MODEL v1 file");
    }
    Model model;
    model.input_dim = static_cast<long>(parse_kv(tok_u, "u"));
    model.num_classes = static_cast<long>(parse_kv(tok_m, "M"));
    model.training_accuracy = parse_kv(tok_acc, "acc");
    model.partition_id = static_cast<int>(parse_kv(tok_part, "partition"));
    if (model.input_dim < 1 || model.num_classes < 1) {
        throw ParseError("model header has non-positive dimensions");
    }

    const long u = model.input_dim;
    const long m = model.num_classes;
    while (!reader.at_end()) {
        std::string rule_line =
            reader.has_pending() ? reader.take_pending() : reader.next("RULE");
        std::istringstream in(rule_line);
        std::string tag, tok_pop, tok_weight;
        in >> tag >> tok_pop >> tok_weight;
        if (tag != "RULE") {
            throw ParseError("expected RULE at line " + std::to_string(reader.line_no()));
        }
        Rule rule;
        rule.population = parse_kv(tok_pop, "pop");
        rule.weight = parse_kv(tok_weight, "weight");

        std::string c_line = reader.next("C");
        if (c_line.rfind("C ", 0) != 0) throw ParseError("expected 'C <floats>' line");
        rule.center = parse_row(c_line.substr(2), u, "C");

        if (reader.next("SINV") != "SINV") throw ParseError("expected SINV line");
        rule.inv_dispersion.resize(u, u);
        for (long i = 0; i < u; ++i) {
            rule.inv_dispersion.row(i) = parse_row(reader.next("SINV row"), u, "SINV");
        }

        if (reader.next("W") != "W") throw ParseError("expected W line");
        rule.consequent.resize(u + 1, m);
        for (long i = 0; i < u + 1; ++i) {
            rule.consequent.row(i) = parse_row(reader.next("W row"), m, "W");
        }
        rule.class_hits = Vector::Zero(m);
        model.rules.push_back(std::move(rule));
    }
    if (model.rules.empty()) throw ParseError("model file contains no rules");
    return model;
}

void write_model_file(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << serialize_model(model);
    if (!out) throw Error("write failed: " + path);
}

Model read_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_model(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string model_filename(int partition_id) {
    return "model_" + std::to_string(partition_id) + ".sfm";
}

}  // namespace streamfuse
