// Serial reference vs OpenMP kernel on the two hot loops.

#include <benchmark/benchmark.h>

#include "coil/analysis.hpp"
#include "coil/datagen.hpp"
#include "coil/kernels.hpp"

using namespace coil;

namespace {

const TabularMdp& grid() {
  static const auto g = build_gridworld(8, 6, true, 60, 0.1);
  return g;
}

const PolicyTable& policy() {
  static const auto pi = [] {
    Rng rng(1);
    return random_policy(48, 4, rng);
  }();
  return pi;
}

const Dataset& pool() {
  static const auto d = generate_single_policy(grid(), policy(), 4000, 2);
  return d;
}

void BM_EvaluateSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::serial::evaluate_returns(grid(), policy(), static_cast<int>(state.range(0)), 3));
}

void BM_EvaluateParallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::evaluate_returns(grid(), policy(), static_cast<int>(state.range(0)), 3));
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto soft = TabularSoftmaxPolicy::from_table(policy());
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::score_pool(soft, pool().trajectories, 0.05));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto soft = TabularSoftmaxPolicy::from_table(policy());
  for (auto _ : state) benchmark::DoNotOptimize(kernels::score_pool(soft, pool().trajectories, 0.05));
}

}  // namespace

BENCHMARK(BM_EvaluateSerial)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
