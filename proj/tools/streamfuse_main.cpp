// streamfuse command line: synth | split | train | aggregate | evaluate |
// experiment. See README.md for a worked pipeline.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamfuse/dataset.hpp"
#include "streamfuse/errors.hpp"
#include "streamfuse/experiment.hpp"
#include "streamfuse/inference.hpp"
#include "streamfuse/merge.hpp"
#include "streamfuse/model_io.hpp"
#include "streamfuse/partition.hpp"
#include "streamfuse/synth.hpp"
#include "streamfuse/vote.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace streamfuse;

namespace {

struct CommonDataFlags {
    std::string label_column;
    std::string normalize = "minmax";
    bool strict = false;
};

CsvOptions csv_options(const CommonDataFlags& flags,
                       const std::vector<std::string>& fixed_labels = {}) {
    CsvOptions options;
    options.strict = flags.strict;
    options.fixed_label_names = fixed_labels;
    if (!flags.label_column.empty()) {
        bool numeric = true;
        for (char c : flags.label_column) {
            numeric = numeric && std::isdigit(static_cast<unsigned char>(c));
        }
        if (numeric) {
            options.label.index = std::stoi(flags.label_column);
        } else {
            options.label.name = flags.label_column;
        }
    }
    return options;
}

json norm_to_json(const NormStats& stats) {
    json j;
    j["method"] = stats.method == NormMethod::MinMax ? "minmax" : "zscore";
    j["scale"] = std::vector<double>(stats.scale.data(), stats.scale.data() + stats.scale.size());
    j["offset"] =
        std::vector<double>(stats.offset.data(), stats.offset.data() + stats.offset.size());
    j["fitted_rows"] = stats.fitted_rows;
    return j;
}

NormStats norm_from_json(const json& j) {
    NormStats stats;
    stats.method = j.at("method") == "minmax" ? NormMethod::MinMax : NormMethod::ZScore;
    const auto scale = j.at("scale").get<std::vector<double>>();
    const auto offset = j.at("offset").get<std::vector<double>>();
    stats.scale = Eigen::Map<const Vector>(scale.data(), static_cast<long>(scale.size()));
    stats.offset = Eigen::Map<const Vector>(offset.data(), static_cast<long>(offset.size()));
    stats.fitted_rows = j.at("fitted_rows").get<std::int64_t>();
    return stats;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void apply_manifest_to_dataset(const json& manifest, Dataset& ds) {
    if (manifest.contains("normalization") && !manifest["normalization"].is_null()) {
        apply_normalization(ds, norm_from_json(manifest["normalization"]));
    }
}

Dataset load_eval_dataset(const std::string& input, const CommonDataFlags& flags,
                          const json* manifest) {
    std::vector<std::string> fixed;
    if (manifest && manifest->contains("label_names")) {
        fixed = (*manifest)["label_names"].get<std::vector<std::string>>();
    }
    Dataset ds = load_csv(input, csv_options(flags, fixed));
    if (manifest) apply_manifest_to_dataset(*manifest, ds);
    return ds;
}

void print_confusion(const Matrix& confusion, const std::vector<std::string>& names) {
    std::cout << "confusion (rows = truth, cols = prediction):\n";
    for (long r = 0; r < confusion.rows(); ++r) {
        std::cout << "  "
                  << (static_cast<std::size_t>(r) < names.size() ? names[static_cast<std::size_t>(r)]
                                                                 : std::to_string(r));
        for (long c = 0; c < confusion.cols(); ++c) {
            std::cout << "\t" << static_cast<long long>(confusion(r, c));
        }
        std::cout << "\n";
    }
}

int run_synth(const std::string& preset, long dims, std::int64_t n, std::uint64_t seed,
              double outliers, double outlier_box, const std::vector<std::string>& blobs,
              const std::string& out) {
    SynthSpec spec;
    if (!blobs.empty()) {
        spec.dims = dims;
        spec.n = n;
        spec.seed = seed;
        for (const std::string& text : blobs) {
            // center;sigma;class[;drift] with comma-separated vectors
            BlobSpec blob;
            std::vector<std::string> parts;
            std::istringstream in(text);
            std::string part;
            while (std::getline(in, part, ';')) parts.push_back(part);
            if (parts.size() < 3) throw Error("bad --blob spec: " + text);
            const auto parse_vec = [&](const std::string& csv) {
                std::vector<double> values;
                std::istringstream vin(csv);
                std::string tok;
                while (std::getline(vin, tok, ',')) values.push_back(std::stod(tok));
                return Eigen::Map<const Vector>(values.data(),
                                                static_cast<long>(values.size()))
                    .eval();
            };
            blob.center = parse_vec(parts[0]);
            blob.sigma = std::stod(parts[1]);
            blob.class_label = std::stoi(parts[2]);
            if (parts.size() > 3) blob.drift = parse_vec(parts[3]);
            spec.blobs.push_back(std::move(blob));
        }
    } else if (preset == "separable") {
        spec = preset_separable(dims, n, seed);
    } else if (preset == "overlapping") {
        spec = preset_overlapping(dims, n, seed);
    } else if (preset == "drifting") {
        spec = preset_drifting(dims, n, seed);
    } else {
        throw Error("unknown preset '" + preset + "' and no --blob given");
    }
    spec.outlier_fraction = outliers;
    spec.outlier_box = outlier_box;
    const Dataset ds = synth_stream(spec);
    write_csv(ds, out);
    std::cout << "wrote " << ds.rows() << " rows x " << ds.dims() << " features, "
              << ds.num_classes << " classes to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partition-parallel evolving fuzzy-rule stream classifier"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled stream");
    std::string synth_preset = "separable";
    std::string synth_out = "synth.csv";
    long synth_dims = 2;
    std::int64_t synth_n = 10000;
    std::uint64_t synth_seed = 0;
    double synth_outliers = 0.0;
    double synth_outlier_box = 10.0;
    std::vector<std::string> synth_blobs;
    synth->add_option("--preset", synth_preset, "separable | overlapping | drifting");
    synth->add_option("--dims", synth_dims, "feature dimension")->check(CLI::PositiveNumber);
    synth->add_option("--n", synth_n, "number of samples")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--outliers", synth_outliers, "uniform-noise fraction");
    synth->add_option("--outlier-box", synth_outlier_box, "noise box half-width");
    synth->add_option("--blob", synth_blobs,
                      "custom blob 'c1,c2,..;sigma;class[;d1,d2,..]' (repeatable)");
    synth->add_option("--out", synth_out, "output CSV")->required();

    // ---- split ----------------------------------------------------------
    auto* split = app.add_subcommand("split", "split a CSV into train/test by stream order");
    std::string split_input, split_train, split_test;
    double split_fraction = 0.8;
    CommonDataFlags split_flags;
    split->add_option("--input", split_input)->required();
    split->add_option("--train-out", split_train)->required();
    split->add_option("--test-out", split_test)->required();
    split->add_option("--fraction", split_fraction, "train fraction (default 0.8)");
    split->add_option("--label-col", split_flags.label_column, "label column name or index");
    split->add_flag("--strict", split_flags.strict, "fail on malformed rows");

    // ---- train ----------------------------------------------------------
    auto* train = app.add_subcommand("train", "partition-parallel single-pass training");
    std::string train_input, train_out_dir;
    int train_partitions = 8;
    int train_parallelism = 1;
    std::uint64_t train_seed = 0;
    bool train_al = false;
    double train_al_budget = 0.4;
    double train_al_step = 0.01;
    bool train_al_grow_on_admit = false;
    bool train_shuffle = false;
    bool train_omit_timings = false;
    LearnerConfig learner_cfg;
    CommonDataFlags train_flags;
    train->add_option("--input", train_input, "training CSV")->required();
    train->add_option("--out", train_out_dir, "output model directory")->required();
    train->add_option("--partitions", train_partitions)->check(CLI::PositiveNumber);
    train->add_option("--parallelism", train_parallelism)->check(CLI::PositiveNumber);
    train->add_option("--seed", train_seed, "base seed (partition i uses seed+i)");
    train->add_flag("--al", train_al, "enable budgeted active learning");
    train->add_option("--al-budget", train_al_budget, "AL budget B in (0,1]");
    train->add_option("--al-step", train_al_step, "AL threshold step");
    train->add_flag("--al-grow-theta-on-admit", train_al_grow_on_admit,
                    "flip the threshold adaptation direction");
    train->add_option("--growth-threshold", learner_cfg.growth_threshold);
    train->add_option("--prune-fraction", learner_cfg.prune_fraction);
    train->add_option("--init-dispersion", learner_cfg.init_dispersion_scale);
    train->add_option("--rls-omega", learner_cfg.rls_omega);
    train->add_option("--rls-forgetting", learner_cfg.rls_forgetting);
    train->add_option("--min-age-prune", learner_cfg.min_age_for_prune);
    train->add_option("--label-col", train_flags.label_column);
    train->add_option("--normalize", train_flags.normalize, "minmax | zscore | none");
    train->add_flag("--shuffle", train_shuffle, "shuffle rows before partitioning");
    train->add_flag("--strict", train_flags.strict);
    train->add_flag("--omit-timings", train_omit_timings,
                    "write a timing-free manifest (byte-reproducible)");

    // ---- aggregate ------------------------------------------------------
    auto* aggregate = app.add_subcommand("aggregate", "fuse partition models");
    std::string agg_mode = "merge";
    std::string agg_models_dir;
    std::string agg_out;
    std::string agg_report_path;
    MergeConfig merge_cfg;
    aggregate->add_option("--mode", agg_mode, "merge | vote")->required();
    aggregate->add_option("--models", agg_models_dir, "directory with model_<id>.sfm")
        ->required();
    aggregate->add_option("--out", agg_out, "merged model file or ensemble manifest")
        ->required();
    aggregate->add_option("--k", merge_cfg.k, "dominant rule count");
    aggregate->add_option("--sim-threshold", merge_cfg.sim_threshold);
    aggregate->add_option("--pop-fraction", merge_cfg.pop_fraction);
    aggregate->add_option("--report", agg_report_path, "merge report JSON path");

    // ---- evaluate -------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "score a model or ensemble on a CSV");
    std::string eval_model, eval_ensemble, eval_input, eval_manifest, eval_report;
    CommonDataFlags eval_flags;
    evaluate->add_option("--model", eval_model, "merged .sfm model");
    evaluate->add_option("--ensemble", eval_ensemble, "ensemble manifest JSON");
    evaluate->add_option("--input", eval_input, "test CSV")->required();
    evaluate->add_option("--manifest", eval_manifest,
                         "training manifest.json (label mapping + normalization)");
    evaluate->add_option("--label-col", eval_flags.label_column);
    evaluate->add_option("--report", eval_report, "write key=value report here");
    evaluate->add_flag("--strict", eval_flags.strict);

    // ---- experiment -----------------------------------------------------
    auto* experiment = app.add_subcommand("experiment", "run a declared structure list");
    std::string exp_config, exp_out = "experiment_out";
    experiment->add_option("--config", exp_config, "experiment plan file")->required();
    experiment->add_option("--out", exp_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return run_synth(synth_preset, synth_dims, synth_n, synth_seed, synth_outliers,
                             synth_outlier_box, synth_blobs, synth_out);
        }

        if (split->parsed()) {
            const Dataset ds = load_csv(split_input, csv_options(split_flags));
            const auto [head, tail] = split_train_test(ds, split_fraction);
            write_csv(head, split_train);
            write_csv(tail, split_test);
            std::cout << "train " << head.rows() << " rows -> " << split_train << "\n"
                      << "test  " << tail.rows() << " rows -> " << split_test << "\n";
            return 0;
        }

        if (train->parsed()) {
            Dataset ds = load_csv(train_input, csv_options(train_flags));
            if (train_shuffle) ds = shuffle_dataset(ds, train_seed);

            json manifest;
            manifest["format"] = "streamfuse-manifest-v1";
            manifest["input"] = train_input;
            manifest["label_names"] = ds.label_names;
            manifest["normalization"] = nullptr;
            if (train_flags.normalize != "none") {
                const NormMethod method = train_flags.normalize == "zscore"
                                              ? NormMethod::ZScore
                                              : NormMethod::MinMax;
                const NormStats stats = fit_normalization(ds, method);
                apply_normalization(ds, stats);
                manifest["normalization"] = norm_to_json(stats);
            }

            TrainOptions options;
            options.learner = learner_cfg;
            options.parallelism = train_parallelism;
            if (train_al) {
                ALConfig al;
                al.budget = train_al_budget;
                al.step = train_al_step;
                al.seed = train_seed;
                al.grow_theta_on_admit = train_al_grow_on_admit;
                options.al = al;
            }
            const PartitionPlan plan =
                make_plan(static_cast<std::size_t>(ds.rows()), train_partitions);
            const InitialModel initial =
                train_all(ds.X, ds.labels, ds.num_classes, plan, options);

            fs::create_directories(train_out_dir);
            json models = json::array();
            for (std::size_t i = 0; i < initial.models.size(); ++i) {
                const Model& model = initial.models[i];
                const std::string filename = model_filename(model.partition_id);
                write_model_file(model, (fs::path(train_out_dir) / filename).string());
                json entry;
                entry["partition"] = model.partition_id;
                entry["file"] = filename;
                entry["training_accuracy"] = model.training_accuracy;
                entry["rules"] = model.rules.size();
                entry["samples_seen"] = model.samples_seen;
                entry["samples_trained"] = model.samples_trained;
                entry["duration_ms"] = train_omit_timings ? 0.0 : initial.partition_ms[i];
                models.push_back(entry);
            }
            // The model index keeps one line per model file.
            std::ofstream out(fs::path(train_out_dir) / "manifest.json");
            out << "{\n"
                << "  \"format\": \"streamfuse-manifest-v1\",\n"
                << "  \"input\": " << json(train_input).dump() << ",\n"
                << "  \"label_names\": " << json(ds.label_names).dump() << ",\n"
                << "  \"normalization\": " << manifest["normalization"].dump() << ",\n"
                << "  \"seed\": " << train_seed << ",\n"
                << "  \"al\": " << (train_al ? "true" : "false") << ",\n"
                << "  \"train_ms\": "
                << json(train_omit_timings ? 0.0 : initial.wall_ms).dump() << ",\n"
                << "  \"models\": [\n";
            for (std::size_t i = 0; i < models.size(); ++i) {
                out << "    " << models[i].dump() << (i + 1 < models.size() ? ",\n" : "\n");
            }
            out << "  ]\n}\n";

            std::cout << "trained " << initial.models.size() << " partition models ("
                      << initial.total_rules() << " rules, "
                      << initial.samples_trained() << "/" << initial.samples_seen()
                      << " samples) -> " << train_out_dir << "\n";
            return 0;
        }

        if (aggregate->parsed()) {
            const json manifest = load_json((fs::path(agg_models_dir) / "manifest.json").string());
            std::vector<Model> models;
            for (const auto& entry : manifest.at("models")) {
                models.push_back(read_model_file(
                    (fs::path(agg_models_dir) / entry.at("file").get<std::string>()).string()));
            }

            if (agg_mode == "vote") {
                make_ensemble(models);  // validates
                json ensemble;
                ensemble["format"] = "streamfuse-ensemble-v1";
                ensemble["models_dir"] = fs::absolute(agg_models_dir).string();
                json files = json::array();
                for (const auto& entry : manifest.at("models")) files.push_back(entry.at("file"));
                ensemble["models"] = files;
                std::ofstream out(agg_out);
                if (!out) throw Error("cannot write " + agg_out);
                out << ensemble.dump(2) << "\n";
                std::cout << "ensemble of " << models.size() << " models -> " << agg_out
                          << "\n";
                return 0;
            }
            if (agg_mode != "merge") throw Error("unknown aggregate mode: " + agg_mode);

            InitialModel initial;
            initial.models = std::move(models);
            WeightedRulePool pool = extract_rules(initial);
            const long pool_initial = static_cast<long>(pool.size());
            pool = remove_low_support(pool, merge_cfg.pop_fraction);
            MergeReport report;
            report.pool_size_initial = pool_initial;
            report.removed_low_support = pool_initial - static_cast<long>(pool.size());
            const Model merged = run_merge(pool, merge_cfg, &report);
            write_model_file(merged, agg_out);
            std::cout << "merged " << pool_initial << " rules (" << report.removed_low_support
                      << " removed low-support) into " << merged.rules.size() << " -> "
                      << agg_out << "\n";

            if (!agg_report_path.empty()) {
                json j;
                j["pool_size_initial"] = report.pool_size_initial;
                j["removed_low_support"] = report.removed_low_support;
                j["pool_size_after_removal"] = report.pool_size_after_removal;
                j["k"] = report.k;
                j["assigned"] = report.assigned;
                j["merged"] = report.merged;
                j["discarded_low_similarity"] = report.discarded_low_similarity;
                j["discarded_blowup"] = report.discarded_blowup;
                json rules = json::array();
                for (const auto& record : report.rules) {
                    json r;
                    r["pool_index"] = record.pool_index;
                    r["source_partition"] = record.source_partition;
                    r["fate"] = to_string(record.fate);
                    if (record.merged_into >= 0) r["merged_into"] = record.merged_into;
                    rules.push_back(r);
                }
                j["rules"] = rules;
                std::ofstream out(agg_report_path);
                if (!out) throw Error("cannot write " + agg_report_path);
                out << j.dump(2) << "\n";
            }
            return 0;
        }

        if (evaluate->parsed()) {
            if (eval_model.empty() == eval_ensemble.empty()) {
                throw Error("evaluate needs exactly one of --model / --ensemble");
            }
            std::optional<json> manifest;
            if (!eval_manifest.empty()) manifest = load_json(eval_manifest);

            long num_classes = 0;
            std::vector<std::string> label_names;
            double accuracy = 0.0;
            Matrix confusion;

            if (!eval_model.empty()) {
                const Model model = read_model_file(eval_model);
                Dataset test = load_eval_dataset(eval_input, eval_flags,
                                                 manifest ? &*manifest : nullptr);
                num_classes = std::max(model.num_classes, test.num_classes);
                label_names = test.label_names;
                confusion = Matrix::Zero(num_classes, num_classes);
                long correct = 0;
                Vector x(test.dims());
                for (long r = 0; r < test.rows(); ++r) {
                    x = test.X.row(r);
                    const int predicted = infer(model, x).class_label;
                    const int truth = test.labels[static_cast<std::size_t>(r)];
                    confusion(truth, predicted) += 1.0;
                    if (predicted == truth) ++correct;
                }
                accuracy = static_cast<double>(correct) / static_cast<double>(test.rows());
            } else {
                const json ensemble_json = load_json(eval_ensemble);
                const fs::path dir = ensemble_json.at("models_dir").get<std::string>();
                if (manifest == std::nullopt) {
                    const fs::path default_manifest = dir / "manifest.json";
                    if (fs::exists(default_manifest)) {
                        manifest = load_json(default_manifest.string());
                    }
                }
                std::vector<Model> models;
                for (const auto& file : ensemble_json.at("models")) {
                    models.push_back(read_model_file((dir / file.get<std::string>()).string()));
                }
                const Ensemble ensemble = make_ensemble(std::move(models));
                Dataset test = load_eval_dataset(eval_input, eval_flags,
                                                 manifest ? &*manifest : nullptr);
                num_classes = std::max(ensemble.num_classes, test.num_classes);
                label_names = test.label_names;
                confusion = Matrix::Zero(num_classes, num_classes);
                long correct = 0;
                Vector x(test.dims());
                for (long r = 0; r < test.rows(); ++r) {
                    x = test.X.row(r);
                    const int predicted = vote(ensemble, x).class_label;
                    const int truth = test.labels[static_cast<std::size_t>(r)];
                    confusion(truth, predicted) += 1.0;
                    if (predicted == truth) ++correct;
                }
                accuracy = static_cast<double>(correct) / static_cast<double>(test.rows());
            }

            std::cout << "accuracy " << accuracy << " over " << confusion.sum() << " rows\n";
            print_confusion(confusion, label_names);
            if (!eval_report.empty()) {
                std::ofstream out(eval_report);
                if (!out) throw Error("cannot write " + eval_report);
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", accuracy);
                out << "accuracy=" << buf << "\n";
                out << "rows=" << static_cast<long long>(confusion.sum()) << "\n";
            }
            return 0;
        }

        if (experiment->parsed()) {
            const ExperimentPlan plan = load_experiment_plan(exp_config);
            run_experiment(plan, exp_out);
            std::cout << "experiment reports in " << exp_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
