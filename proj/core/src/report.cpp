#include "streamfuse/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "streamfuse/errors.hpp"

namespace streamfuse {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string format_report(const RunReport& report) {
    std::string out;
    out += "structure=" + report.structure + "\n";
    out += "aggregation=" + report.aggregation + "\n";
    out += "al_enabled=" + std::string(report.al_enabled ? "true" : "false") + "\n";
    if (report.al_enabled) out += "al_budget=" + fmt(report.al_budget) + "\n";
    out += "normalization=" + report.normalization + "\n";
    out += "accuracy=" + fmt(report.accuracy) + "\n";
    out += "compression_rate=" + fmt(report.compression_rate) + "\n";
    out += "rules_before=" + std::to_string(report.rules_before) + "\n";
    out += "rules_after=" + std::to_string(report.rules_after) + "\n";
    if (report.include_timings) {
        out += "train_ms=" + fmt(report.train_ms) + "\n";
        out += "aggregate_ms=" + fmt(report.aggregate_ms) + "\n";
        out += "evaluate_ms=" + fmt(report.evaluate_ms) + "\n";
    }
    for (const PartitionReport& p : report.partitions) {
        const std::string prefix = "partition." + std::to_string(p.partition_id) + ".";
        out += prefix + "training_accuracy=" + fmt(p.training_accuracy) + "\n";
        out += prefix + "rules=" + std::to_string(p.rules) + "\n";
        out += prefix + "samples_seen=" + std::to_string(p.samples_seen) + "\n";
        out += prefix + "samples_trained=" + std::to_string(p.samples_trained) + "\n";
        if (report.include_timings) {
            out += prefix + "duration_ms=" + fmt(p.duration_ms) + "\n";
        }
    }
    return out;
}

void print_report_table(const RunReport& report, std::ostream& out) {
    char line[256];
    out << "structure " << report.structure << " (" << report.aggregation
        << (report.al_enabled ? ", AL on" : ", AL off") << ")\n";
    std::snprintf(line, sizeof(line),
                  "  accuracy          %8.4f\n"
                  "  compression rate  %8.4f\n"
                  "  rules before/after %4ld -> %ld\n",
                  report.accuracy, report.compression_rate, report.rules_before,
                  report.rules_after);
    out << line;
    if (report.include_timings) {
        std::snprintf(line, sizeof(line),
                      "  time train/aggregate/evaluate  %.1f / %.1f / %.1f ms\n",
                      report.train_ms, report.aggregate_ms, report.evaluate_ms);
        out << line;
    }
    if (!report.partitions.empty()) {
        out << "  partition  acc     rules  trained/seen\n";
        for (const PartitionReport& p : report.partitions) {
            std::snprintf(line, sizeof(line), "  %9d  %6.4f  %5ld  %lld/%lld\n",
                          p.partition_id, p.training_accuracy, p.rules,
                          static_cast<long long>(p.samples_trained),
                          static_cast<long long>(p.samples_seen));
            out << line;
        }
    }
}

void emit_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open report path for writing: " + path);
    out << format_report(report);
    if (!out) throw Error("report write failed: " + path);
    print_report_table(report, std::cout);
}

}  // namespace streamfuse
