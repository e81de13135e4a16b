#pragma once

#include <optional>
#include <string>
#include <vector>

#include "streamfuse/dataset.hpp"
#include "streamfuse/learner.hpp"
#include "streamfuse/merge.hpp"
#include "streamfuse/partition.hpp"
#include "streamfuse/report.hpp"

namespace streamfuse {

/// One of the four framework structures: {AL on/off} x {merge | vote}.
struct StructureSpec {
    std::string name = "structure";
    bool al_enabled = false;
    std::string aggregation = "merge";  // merge | vote
    int partitions = 8;
    int parallelism = 1;
    LearnerConfig learner;
    MergeConfig merge;
    double al_budget = 0.4;
    double al_step = 0.01;
    bool al_grow_theta_on_admit = false;
    std::uint64_t seed = 0;
    bool include_timings = true;

    void validate() const;
};

/// Partition training, aggregation and test evaluation for one structure,
/// producing all four metrics.
RunReport run_structure(const StructureSpec& spec, const Dataset& train,
                        const Dataset& test);

struct KSweepRow {
    int k = 0;
    bool skipped = false;  // k exceeded the pool
    double accuracy_with_removal = 0.0;
    double accuracy_without_removal = 0.0;
};

/// For each k: merge-aggregate the same initial model with and without the
/// low-support removal step and evaluate on the test set. Rows whose k
/// exceeds the (smaller, post-removal) pool are marked skipped.
std::vector<KSweepRow> run_k_sweep(const StructureSpec& spec, const Dataset& train,
                                   const Dataset& test, const std::vector<int>& k_values);

/// Declarative experiment file: global key=value lines (data sources,
/// normalization), then one [structure <name>] section per run. See the
/// README for the key list.
struct ExperimentPlan {
    std::string train_path;  // CSV path or "synth:<preset>:n=<n>:seed=<s>[:outliers=<f>]"
    std::string test_path;   // empty: hold out the tail of train via split
    double train_fraction = 0.8;
    std::string normalize = "none";  // none | minmax | zscore
    std::string label_column;        // name or index; empty = last
    std::vector<StructureSpec> structures;
};

ExperimentPlan parse_experiment_plan(const std::string& text);
ExperimentPlan load_experiment_plan(const std::string& path);

/// Runs every structure in the plan, writing report_<name>.txt files plus a
/// summary.txt into out_dir. Returns the reports in plan order.
std::vector<RunReport> run_experiment(const ExperimentPlan& plan,
                                      const std::string& out_dir);

/// Resolves a plan data source ("synth:..." or a CSV path) into a dataset.
Dataset load_plan_dataset(const std::string& source, const std::string& label_column);

}  // namespace streamfuse
