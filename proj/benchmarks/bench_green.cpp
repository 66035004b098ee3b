#include <benchmark/benchmark.h>

#include "rangekit/green.hpp"
#include "rangekit/step_law.hpp"

using namespace rangekit;

static void GreenSeries(benchmark::State& state) {
  const StepLaw law = reference_walk_law();
  const double lambda = 1.0 / double(state.range(0));
  for (auto _ : state) {
    const GreenTable t = green_series(law, lambda, 10);
    benchmark::DoNotOptimize(t.g0());
  }
}
BENCHMARK(GreenSeries)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void GreenFourier(benchmark::State& state) {
  const StepLaw law = reference_walk_law();
  const double lambda = std::pow(10.0, -double(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(green_fourier(law, lambda, {3, 4}).value);
  }
}
BENCHMARK(GreenFourier)->Arg(2)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

static void CxQuadrature(benchmark::State& state) {
  const StepLaw law = reference_walk_law();
  for (auto _ : state) {
    benchmark::DoNotOptimize(c_x(law).value);
  }
}
BENCHMARK(CxQuadrature)->Unit(benchmark::kMillisecond);
