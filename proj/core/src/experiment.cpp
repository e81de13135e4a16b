#include "streamfuse/experiment.hpp"

#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "streamfuse/errors.hpp"
#include "streamfuse/inference.hpp"
#include "streamfuse/synth.hpp"
#include "streamfuse/vote.hpp"

namespace streamfuse {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double evaluate_model(const Model& model, const Dataset& test) {
    std::int64_t correct = 0;
    Vector x(test.dims());
    for (long r = 0; r < test.rows(); ++r) {
        x = test.X.row(r);
        if (infer(model, x).class_label == test.labels[static_cast<std::size_t>(r)]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(test.rows());
}

}  // namespace

void StructureSpec::validate() const {
    if (aggregation != "merge" && aggregation != "vote") {
        throw Error("structure '" + name + "': aggregation must be merge or vote");
    }
    if (partitions < 1) throw Error("structure '" + name + "': partitions must be >= 1");
    if (parallelism < 1) throw Error("structure '" + name + "': parallelism must be >= 1");
    learner.validate();
    if (aggregation == "merge") merge.validate();
    if (al_enabled && !(al_budget > 0.0 && al_budget <= 1.0)) {
        throw Error("structure '" + name + "': al_budget must be in (0,1]");
    }
}

RunReport run_structure(const StructureSpec& spec, const Dataset& train,
                        const Dataset& test) {
    spec.validate();
    if (train.dims() != test.dims()) {
        throw DimensionError("run_structure test dims", train.dims(), test.dims());
    }
    if (test.rows() == 0) throw Error("run_structure: empty test set");
    const long num_classes = std::max(train.num_classes, test.num_classes);

    TrainOptions options;
    options.learner = spec.learner;
    options.parallelism = spec.parallelism;
    if (spec.al_enabled) {
        ALConfig al;
        al.budget = spec.al_budget;
        al.step = spec.al_step;
        al.seed = spec.seed;
        al.grow_theta_on_admit = spec.al_grow_theta_on_admit;
        options.al = al;
    }

    RunReport report;
    report.structure = spec.name;
    report.aggregation = spec.aggregation;
    report.al_enabled = spec.al_enabled;
    report.al_budget = spec.al_enabled ? spec.al_budget : 0.0;
    report.include_timings = spec.include_timings;

    const PartitionPlan plan = make_plan(static_cast<std::size_t>(train.rows()),
                                         spec.partitions);
    const auto t_train = Clock::now();
    const InitialModel initial =
        train_all(train.X, train.labels, num_classes, plan, options);
    report.train_ms = ms_since(t_train);

    report.rules_before = initial.total_rules();
    const std::int64_t seen = initial.samples_seen();
    const std::int64_t trained = initial.samples_trained();
    report.compression_rate =
        spec.al_enabled && seen > 0
            ? static_cast<double>(trained) / static_cast<double>(seen)
            : 1.0;
    for (std::size_t i = 0; i < initial.models.size(); ++i) {
        const Model& m = initial.models[i];
        report.partitions.push_back({m.partition_id, m.training_accuracy,
                                     static_cast<long>(m.rules.size()), m.samples_seen,
                                     m.samples_trained, initial.partition_ms[i]});
    }

    const auto t_agg = Clock::now();
    std::optional<Model> merged;
    std::optional<Ensemble> ensemble;
    if (spec.aggregation == "merge") {
        WeightedRulePool pool = extract_rules(initial);
        const long pool_initial = static_cast<long>(pool.size());
        pool = remove_low_support(pool, spec.merge.pop_fraction);
        MergeReport merge_report;
        merge_report.pool_size_initial = pool_initial;
        merge_report.removed_low_support = pool_initial - static_cast<long>(pool.size());
        merged = run_merge(pool, spec.merge, &merge_report);
        report.rules_after = static_cast<long>(merged->rules.size());
    } else {
        ensemble = make_ensemble(initial.models);
        report.rules_after = report.rules_before;
    }
    report.aggregate_ms = ms_since(t_agg);

    const auto t_eval = Clock::now();
    report.accuracy = merged ? evaluate_model(*merged, test)
                             : vote_batch(*ensemble, test.X, test.labels);
    report.evaluate_ms = ms_since(t_eval);
    return report;
}

std::vector<KSweepRow> run_k_sweep(const StructureSpec& spec, const Dataset& train,
                                   const Dataset& test, const std::vector<int>& k_values) {
    StructureSpec merge_spec = spec;
    merge_spec.aggregation = "merge";
    merge_spec.validate();
    const long num_classes = std::max(train.num_classes, test.num_classes);

    TrainOptions options;
    options.learner = merge_spec.learner;
    options.parallelism = merge_spec.parallelism;
    if (merge_spec.al_enabled) {
        ALConfig al;
        al.budget = merge_spec.al_budget;
        al.step = merge_spec.al_step;
        al.seed = merge_spec.seed;
        al.grow_theta_on_admit = merge_spec.al_grow_theta_on_admit;
        options.al = al;
    }
    const PartitionPlan plan = make_plan(static_cast<std::size_t>(train.rows()),
                                         merge_spec.partitions);
    const InitialModel initial =
        train_all(train.X, train.labels, num_classes, plan, options);

    const WeightedRulePool full_pool = extract_rules(initial);
    const WeightedRulePool trimmed_pool =
        remove_low_support(full_pool, merge_spec.merge.pop_fraction);

    std::vector<KSweepRow> rows;
    for (int k : k_values) {
        KSweepRow row;
        row.k = k;
        // Both variants must support the same k for a like-for-like row.
        if (k < 1 || static_cast<std::size_t>(k) > trimmed_pool.size() ||
            static_cast<std::size_t>(k) > full_pool.size()) {
            row.skipped = true;
            rows.push_back(row);
            continue;
        }
        MergeConfig cfg = merge_spec.merge;
        cfg.k = k;
        const Model with_removal = run_merge(trimmed_pool, cfg);
        const Model without_removal = run_merge(full_pool, cfg);
        row.accuracy_with_removal = evaluate_model(with_removal, test);
        row.accuracy_without_removal = evaluate_model(without_removal, test);
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ParseError("experiment config: bad boolean for " + key + ": '" + value + "'");
}

double parse_num(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("experiment config: bad number for " + key + ": '" + value + "'");
}

void apply_structure_key(StructureSpec& s, const std::string& key,
                         const std::string& value) {
    if (key == "aggregation") s.aggregation = value;
    else if (key == "al") s.al_enabled = parse_bool(value, key);
    else if (key == "partitions") s.partitions = static_cast<int>(parse_num(value, key));
    else if (key == "parallelism") s.parallelism = static_cast<int>(parse_num(value, key));
    else if (key == "k") s.merge.k = static_cast<int>(parse_num(value, key));
    else if (key == "sim_threshold") s.merge.sim_threshold = parse_num(value, key);
    else if (key == "pop_fraction") s.merge.pop_fraction = parse_num(value, key);
    else if (key == "al_budget") s.al_budget = parse_num(value, key);
    else if (key == "al_step") s.al_step = parse_num(value, key);
    else if (key == "al_grow_theta_on_admit") s.al_grow_theta_on_admit = parse_bool(value, key);
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_num(value, key));
    else if (key == "growth_threshold") s.learner.growth_threshold = parse_num(value, key);
    else if (key == "prune_fraction") s.learner.prune_fraction = parse_num(value, key);
    else if (key == "init_dispersion_scale") s.learner.init_dispersion_scale = parse_num(value, key);
    else if (key == "rls_omega") s.learner.rls_omega = parse_num(value, key);
    else if (key == "rls_forgetting") s.learner.rls_forgetting = parse_num(value, key);
    else if (key == "min_age_for_prune") s.learner.min_age_for_prune = static_cast<int>(parse_num(value, key));
    else if (key == "include_timings") s.include_timings = parse_bool(value, key);
    else throw ParseError("experiment config: unknown structure key '" + key + "'");
}

}  // namespace

ExperimentPlan parse_experiment_plan(const std::string& text) {
    ExperimentPlan plan;
    StructureSpec* current = nullptr;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim_copy(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                throw ParseError("experiment config: unterminated section at line " +
                                 std::to_string(line_no));
            }
            std::istringstream section(stripped.substr(1, stripped.size() - 2));
            std::string kind, name;
            section >> kind >> name;
            if (kind != "structure" || name.empty()) {
                throw ParseError("experiment config: expected [structure <name>] at line " +
                                 std::to_string(line_no));
            }
            StructureSpec spec;
            spec.name = name;
            plan.structures.push_back(spec);
            current = &plan.structures.back();
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError("experiment config: expected key=value at line " +
                             std::to_string(line_no));
        }
        const std::string key = trim_copy(stripped.substr(0, eq));
        const std::string value = trim_copy(stripped.substr(eq + 1));
        if (current) {
            apply_structure_key(*current, key, value);
        } else if (key == "train") {
            plan.train_path = value;
        } else if (key == "test") {
            plan.test_path = value;
        } else if (key == "train_fraction") {
            plan.train_fraction = parse_num(value, key);
        } else if (key == "normalize") {
            plan.normalize = value;
        } else if (key == "label_column") {
            plan.label_column = value;
        } else {
            throw ParseError("experiment config: unknown global key '" + key + "'");
        }
    }
    if (plan.train_path.empty()) throw ParseError("experiment config: missing train=");
    if (plan.structures.empty()) {
        throw ParseError("experiment config: no [structure ...] sections");
    }
    return plan;
}

ExperimentPlan load_experiment_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open experiment config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_plan(buf.str());
}

Dataset load_plan_dataset(const std::string& source, const std::string& label_column) {
    if (source.rfind("synth:", 0) == 0) {
        std::vector<std::string> parts;
        std::istringstream in(source);
        std::string part;
        while (std::getline(in, part, ':')) parts.push_back(part);
        if (parts.size() < 2) throw ParseError("bad synth source: " + source);
        const std::string preset = parts[1];
        std::int64_t n = 10000;
        std::uint64_t seed = 0;
        double outliers = 0.0;
        for (std::size_t i = 2; i < parts.size(); ++i) {
            const std::size_t eq = parts[i].find('=');
            if (eq == std::string::npos) throw ParseError("bad synth option: " + parts[i]);
            const std::string key = parts[i].substr(0, eq);
            const double value = parse_num(parts[i].substr(eq + 1), key);
            if (key == "n") n = static_cast<std::int64_t>(value);
            else if (key == "seed") seed = static_cast<std::uint64_t>(value);
            else if (key == "outliers") outliers = value;
            else throw ParseError("unknown synth option: " + key);
        }
        SynthSpec spec;
        if (preset == "separable") spec = preset_separable(2, n, seed);
        else if (preset == "overlapping") spec = preset_overlapping(2, n, seed);
        else if (preset == "drifting") spec = preset_drifting(2, n, seed);
        else throw ParseError("unknown synth preset: " + preset);
        spec.outlier_fraction = outliers;
        return synth_stream(spec);
    }
    CsvOptions options;
    if (!label_column.empty()) {
        bool numeric = !label_column.empty();
        for (char c : label_column) numeric = numeric && std::isdigit(static_cast<unsigned char>(c));
        if (numeric) options.label.index = std::stoi(label_column);
        else options.label.name = label_column;
    }
    return load_csv(source, options);
}

std::vector<RunReport> run_experiment(const ExperimentPlan& plan,
                                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    Dataset train = load_plan_dataset(plan.train_path, plan.label_column);
    Dataset test;
    if (plan.test_path.empty()) {
        auto [head, tail] = split_train_test(train, plan.train_fraction);
        train = std::move(head);
        test = std::move(tail);
    } else {
        CsvOptions options;
        options.fixed_label_names = train.label_names;
        if (plan.test_path.rfind("synth:", 0) == 0) {
            test = load_plan_dataset(plan.test_path, plan.label_column);
        } else {
            if (!plan.label_column.empty()) {
                bool numeric = true;
                for (char c : plan.label_column) {
                    numeric = numeric && std::isdigit(static_cast<unsigned char>(c));
                }
                if (numeric) options.label.index = std::stoi(plan.label_column);
                else options.label.name = plan.label_column;
            }
            test = load_csv(plan.test_path, options);
        }
    }

    std::string norm_name = plan.normalize;
    if (norm_name == "minmax") {
        const NormStats stats = fit_normalization(train, NormMethod::MinMax);
        apply_normalization(train, stats);
        apply_normalization(test, stats);
    } else if (norm_name == "zscore") {
        const NormStats stats = fit_normalization(train, NormMethod::ZScore);
        apply_normalization(train, stats);
        apply_normalization(test, stats);
    } else if (norm_name != "none") {
        throw ParseError("experiment config: unknown normalize mode '" + norm_name + "'");
    }

    std::vector<RunReport> reports;
    std::ofstream summary(fs::path(out_dir) / "summary.txt");
    for (const StructureSpec& spec : plan.structures) {
        RunReport report = run_structure(spec, train, test);
        report.normalization = norm_name;
        const std::string path = (fs::path(out_dir) / ("report_" + spec.name + ".txt")).string();
        emit_report(report, path);
        summary << spec.name << " accuracy=" << report.accuracy
                << " compression=" << report.compression_rate
                << " rules=" << report.rules_before << "->" << report.rules_after << "\n";
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace streamfuse
