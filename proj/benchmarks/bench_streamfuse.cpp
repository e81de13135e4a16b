#include <benchmark/benchmark.h>

#include <cmath>

#include "streamfuse/inference.hpp"
#include "streamfuse/learner.hpp"
#include "streamfuse/merge.hpp"
#include "streamfuse/partition.hpp"
#include "streamfuse/synth.hpp"

using namespace streamfuse;

namespace {

Dataset make_stream(long dims, std::int64_t n) {
    return synth_stream(preset_overlapping(dims, n, 17));
}

LearnerConfig tuned_config(long dims) {
    LearnerConfig cfg;
    // Pairwise same-cluster distances concentrate near sqrt(2*dims) sigma;
    // keep the growth gate a few sigma beyond that.
    cfg.growth_threshold = std::sqrt(2.0 * static_cast<double>(dims)) + 3.0;
    return cfg;
}

void BM_LearnOne(benchmark::State& state) {
    const long dims = state.range(0);
    const Dataset ds = make_stream(dims, 20000);
    for (auto _ : state) {
        EvolvingLearner learner(dims, 2, tuned_config(dims));
        for (long r = 0; r < ds.rows(); ++r) {
            learner.learn_one(ds.X.row(r), ds.labels[static_cast<std::size_t>(r)]);
        }
        benchmark::DoNotOptimize(learner.model().rules.size());
    }
    state.SetItemsProcessed(state.iterations() * ds.rows());
}
BENCHMARK(BM_LearnOne)->Arg(2)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Infer(benchmark::State& state) {
    const long dims = 8;
    const Dataset ds = make_stream(dims, 20000);
    const auto trained = train_partition(ds.X, ds.labels, 2, tuned_config(dims),
                                         std::nullopt, 0);
    Vector x = ds.X.row(0);
    std::size_t row = 0;
    for (auto _ : state) {
        x = ds.X.row(static_cast<long>(row++ % 20000));
        benchmark::DoNotOptimize(infer(trained.model, x).class_label);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Infer);

void BM_ActiveLearningFilter(benchmark::State& state) {
    // Full per-sample cost of the AL decision path (conflicts + threshold).
    const long dims = 8;
    const Dataset ds = make_stream(dims, 20000);
    const auto trained = train_partition(ds.X, ds.labels, 2, tuned_config(dims),
                                         std::nullopt, 0);
    ALConfig cfg;
    cfg.budget = 0.4;
    ALState al = make_al_state(2, cfg);
    Vector x = ds.X.row(0);
    std::size_t row = 0;
    for (auto _ : state) {
        x = ds.X.row(static_cast<long>(row++ % 20000));
        const double out_conf = output_conflict(infer_scores(trained.model, x));
        const double in_conf = input_conflict(trained.model, x);
        al.seen += 1;
        benchmark::DoNotOptimize(al.decide(out_conf, in_conf));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ActiveLearningFilter);

void BM_TrainAll(benchmark::State& state) {
    const int parallelism = static_cast<int>(state.range(0));
    const Dataset ds = make_stream(8, 80000);
    const PartitionPlan plan = make_plan(80000, 8);
    TrainOptions options;
    options.learner = tuned_config(8);
    options.parallelism = parallelism;
    for (auto _ : state) {
        const InitialModel initial = train_all(ds.X, ds.labels, 2, plan, options);
        benchmark::DoNotOptimize(initial.total_rules());
    }
    state.SetItemsProcessed(state.iterations() * ds.rows());
}
BENCHMARK(BM_TrainAll)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_RunMerge(benchmark::State& state) {
    const Dataset ds = make_stream(2, 100000);
    const PartitionPlan plan = make_plan(100000, 8);
    TrainOptions options;
    const InitialModel initial = train_all(ds.X, ds.labels, 2, plan, options);
    WeightedRulePool pool = extract_rules(initial);
    pool = remove_low_support(pool, 0.05);
    MergeConfig cfg;
    cfg.k = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_merge(pool, cfg).rules.size());
    }
    state.SetLabel(std::to_string(pool.size()) + " rules pooled");
}
BENCHMARK(BM_RunMerge);

}  // namespace

BENCHMARK_MAIN();
