// OpenMP kernels against their serial references. Run with
// OMP_NUM_THREADS=<n> to vary the thread count.

#include <benchmark/benchmark.h>

#include "fsnt/estimators.hpp"
#include "fsnt/kernels.hpp"
#include "fsnt/learn.hpp"
#include "fsnt/trafficgen.hpp"

using namespace fsnt;

namespace {

const Dataset& corpus() {
    static const Dataset d = [] {
        GeneratorSpec g;
        g.counts = {2500, 2500, 2500, 2500};
        g.seed = 3;
        return generate_dataset(g);
    }();
    return d;
}

void BM_Covariance(benchmark::State& state) {
    const auto& d = corpus();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::covariance(d.values(), d.size(), d.width()));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}

void BM_CovarianceSerial(benchmark::State& state) {
    const auto& d = corpus();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::covariance_serial(d.values(), d.size(), d.width()));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}

constexpr std::size_t kQueries = 200;

void BM_KnnSearch(benchmark::State& state) {
    const auto& d = corpus();
    const auto q = d.values().first(kQueries * d.width());
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::knn_search(d.values(), d.size(), q, kQueries, d.width(), 5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kQueries));
}

void BM_KnnSearchSerial(benchmark::State& state) {
    const auto& d = corpus();
    const auto q = d.values().first(kQueries * d.width());
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::knn_search_serial(d.values(), d.size(), q, kQueries, d.width(), 5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kQueries));
}

const TrainedModel& forest_model() {
    static const TrainedModel m = fit({EstimatorKind::RF, {{"trees", 50}}, 1}, corpus());
    return m;
}

void BM_PredictBatch(benchmark::State& state) {
    const auto& m = forest_model();
    for (auto _ : state) benchmark::DoNotOptimize(predict_proba_batch(m, corpus()));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_PredictBatchSerial(benchmark::State& state) {
    const auto& m = forest_model();
    for (auto _ : state) benchmark::DoNotOptimize(predict_proba_batch_serial(m, corpus()));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void forest_fit(benchmark::State& state, bool parallel) {
    const auto& d = corpus();
    const estimators::TrainingView view{d.values(), d.size(), d.width(), d.labels()};
    auto hp = default_hyperparameters(EstimatorKind::RF);
    hp["trees"] = 16;
    for (auto _ : state) {
        estimators::Diagnostics diag;
        benchmark::DoNotOptimize(estimators::fit_forest(view, hp, 7, diag, parallel));
    }
}

void BM_ForestFit(benchmark::State& state) { forest_fit(state, true); }
void BM_ForestFitSerial(benchmark::State& state) { forest_fit(state, false); }

}  // namespace

BENCHMARK(BM_Covariance)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CovarianceSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnSearch)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnSearchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictBatch)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictBatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestFit)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestFitSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
