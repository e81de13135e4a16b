#include "streamfuse/partition.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include "streamfuse/errors.hpp"
#include "streamfuse/model_io.hpp"

namespace streamfuse {

PartitionPlan make_plan(std::size_t n_samples, int l) {
    if (l < 1) throw Error("make_plan: need at least 1 partition");
    if (static_cast<std::size_t>(l) > n_samples) {
        throw Error("make_plan: " + std::to_string(l) + " partitions exceed " +
                    std::to_string(n_samples) + " samples");
    }
    PartitionPlan plan;
    plan.num_partitions = l;
    plan.ranges.reserve(static_cast<std::size_t>(l));
    const std::size_t base = n_samples / static_cast<std::size_t>(l);
    const std::size_t remainder = n_samples % static_cast<std::size_t>(l);
    std::size_t begin = 0;
    for (int i = 0; i < l; ++i) {
        const std::size_t size = base + (static_cast<std::size_t>(i) < remainder ? 1 : 0);
        plan.ranges.push_back({begin, begin + size});
        begin += size;
    }
    return plan;
}

InitialModel train_all(const Eigen::Ref<const Matrix>& X, std::span<const int> labels,
                       long num_classes, const PartitionPlan& plan,
                       const TrainOptions& options) {
    if (options.parallelism < 1) throw Error("train_all: parallelism must be >= 1");
    const int l = plan.num_partitions;
    if (static_cast<std::size_t>(X.rows()) != labels.size()) {
        throw DimensionError("train_all labels", X.rows(), static_cast<long>(labels.size()));
    }

    InitialModel initial;
    initial.models.resize(static_cast<std::size_t>(l));
    initial.partition_ms.assign(static_cast<std::size_t>(l), 0.0);
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(l));

    std::atomic<int> next{0};
    std::atomic<bool> stop{false};

    const auto run_partition = [&](int pid) {
        const auto& range = plan.ranges[static_cast<std::size_t>(pid)];
        std::optional<ALConfig> al = options.al;
        if (al) al->seed += static_cast<std::uint64_t>(pid);
        const auto t0 = std::chrono::steady_clock::now();
        PartitionTrainResult result = train_partition(
            X.middleRows(static_cast<long>(range.begin), static_cast<long>(range.size())),
            labels.subspan(range.begin, range.size()), num_classes, options.learner, al,
            pid);
        const auto t1 = std::chrono::steady_clock::now();
        initial.partition_ms[static_cast<std::size_t>(pid)] =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        initial.models[static_cast<std::size_t>(pid)] = std::move(result.model);
    };

    const auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const int pid = next.fetch_add(1, std::memory_order_relaxed);
            if (pid >= l) return;
            try {
                run_partition(pid);
            } catch (...) {
                failures[static_cast<std::size_t>(pid)] = std::current_exception();
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    const auto wall0 = std::chrono::steady_clock::now();
    const int n_threads = std::min(options.parallelism, l);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }
    const auto wall1 = std::chrono::steady_clock::now();
    initial.wall_ms = std::chrono::duration<double, std::milli>(wall1 - wall0).count();

    for (int pid = 0; pid < l; ++pid) {
        if (failures[static_cast<std::size_t>(pid)]) {
            try {
                std::rethrow_exception(failures[static_cast<std::size_t>(pid)]);
            } catch (const std::exception& e) {
                throw Error("partition " + std::to_string(pid) + " failed: " + e.what());
            }
        }
    }
    if (stop.load()) {
        throw Error("train_all: a partition failed with a non-standard exception");
    }
    return initial;
}

std::string serialize_initial_model(const InitialModel& initial) {
    std::string out;
    for (const Model& model : initial.models) out += serialize_model(model);
    return out;
}

}  // namespace streamfuse
