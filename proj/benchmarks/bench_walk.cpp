#include <benchmark/benchmark.h>

#include "rangekit/walk.hpp"

using namespace rangekit;

static void RangeStream(benchmark::State& state) {
  const StepLaw law = reference_walk_law();
  const std::int64_t n = state.range(0);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    const auto r = range_checkpoints(law, {n}, 1, stream++);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(RangeStream)->Arg(1 << 16)->Arg(1 << 20);

static void IntersectionCounts(benchmark::State& state) {
  const StepLaw law = reference_walk_law();
  const WalkSample w = simulate_walk(law, state.range(0), 2);
  const OccupationMap occ(w, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ilt_u128(occ, 2));
    benchmark::DoNotOptimize(ilt_u128(occ, 4));
  }
}
BENCHMARK(IntersectionCounts)->Arg(1 << 14)->Arg(1 << 18);

static void ShiftedCounts(benchmark::State& state) {
  const StepLaw law = reference_walk_law();
  const WalkSample w = simulate_walk(law, state.range(0), 3);
  const OccupationMap occ(w, state.range(0), true);
  for (auto _ : state) {
    benchmark::DoNotOptimize(shifted_ilt(occ, 2, {Vec2i{1, 0}}));
  }
}
BENCHMARK(ShiftedCounts)->Arg(1 << 10)->Arg(1 << 14);

BENCHMARK_MAIN();
