#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace streamfuse {

struct PartitionReport {
    int partition_id = 0;
    double training_accuracy = 0.0;
    long rules = 0;
    std::int64_t samples_seen = 0;
    std::int64_t samples_trained = 0;
    double duration_ms = 0.0;
};

/// The four evaluation metrics plus per-partition detail for one run.
struct RunReport {
    std::string structure;          // e.g. "merge" / "vote" / "al_merge"
    std::string aggregation;        // merge | vote
    bool al_enabled = false;
    double al_budget = 0.0;
    std::string normalization = "none";

    double accuracy = 0.0;          // test accuracy in [0,1]
    double compression_rate = 1.0;  // trained/seen; exactly 1 when AL is off
    long rules_before = 0;
    long rules_after = 0;

    double train_ms = 0.0;
    double aggregate_ms = 0.0;
    double evaluate_ms = 0.0;

    std::vector<PartitionReport> partitions;

    /// Timing lines are skipped when false so two identical runs emit
    /// byte-identical reports.
    bool include_timings = true;
};

/// Machine-readable key=value text, one metric per line.
std::string format_report(const RunReport& report);

/// Writes format_report to `path` and prints the human-readable table to
/// stdout. Throws on an unwritable path.
void emit_report(const RunReport& report, const std::string& path);

void print_report_table(const RunReport& report, std::ostream& out);

}  // namespace streamfuse
