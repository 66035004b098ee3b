#include <benchmark/benchmark.h>

#include "rangekit/brownian.hpp"

using namespace rangekit;

static void AlphaRecursion(benchmark::State& state) {
  const double h = 1.0 / double(state.range(0));
  const BrownPath p = simulate_bm(h, 1.0, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(alpha_k_eps(p, 2, 16.0 * h, 1.0));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(AlphaRecursion)->RangeMultiplier(2)->Range(512, 4096)->Complexity()->Unit(benchmark::kMillisecond);

static void AlphaGrid(benchmark::State& state) {
  const double h = 1.0 / double(state.range(0));
  const BrownPath p = simulate_bm(h, 1.0, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(alpha_2_grid(p, 16.0 * h, 1.0));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(AlphaGrid)->RangeMultiplier(2)->Range(512, 16384)->Complexity()->Unit(benchmark::kMillisecond);

static void Gamma2Pipeline(benchmark::State& state) {
  const double h = 1e-4;
  const BrownPath p = simulate_bm(h, 1.0, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gamma_k(p, 2, 1.0, {16 * h, 8 * h, 4 * h}).value());
  }
}
BENCHMARK(Gamma2Pipeline)->Unit(benchmark::kMillisecond);
