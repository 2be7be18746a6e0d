#include "ddctrl/experiment.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ddctrl;

namespace {

Trajectory random_trajectory(Index T, Index m, Index p) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix u(T, m), y(T, p);
    for (Index i = 0; i < T; ++i) {
        for (Index j = 0; j < m; ++j) u(i, j) = n(rng);
        for (Index j = 0; j < p; ++j) y(i, j) = n(rng);
    }
    return Trajectory(u, y);
}

void BM_HankelParallel(benchmark::State& state) {
    const Trajectory w = random_trajectory(state.range(0), 1, 2);
    for (auto _ : state) benchmark::DoNotOptimize(build_hankel(w, 604));
}

void BM_HankelSerial(benchmark::State& state) {
    const Trajectory w = random_trajectory(state.range(0), 1, 2);
    for (auto _ : state) benchmark::DoNotOptimize(reference::build_hankel(w, 604));
}

ExperimentConfig sweep_config() {
    ExperimentConfig c;
    c.lambdas = {1.0, 100.0};
    c.methods = {"direct_l1", "direct_proj", "spc", "subspace_id"};
    c.trials = 8;
    return c;
}

void BM_ScenarioParallel(benchmark::State& state) {
    const ExperimentConfig c = sweep_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(c, static_cast<int>(state.range(0))));
}

void BM_ScenarioSerial(benchmark::State& state) {
    const ExperimentConfig c = sweep_config();
    for (auto _ : state) benchmark::DoNotOptimize(reference::run_scenario(c));
}

}  // namespace

BENCHMARK(BM_HankelParallel)->Arg(2415)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HankelSerial)->Arg(2415)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScenarioParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScenarioSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
