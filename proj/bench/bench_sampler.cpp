#include <benchmark/benchmark.h>

#include "vdyn/sampler.hpp"

namespace {

vdyn::SamplingConfig bench_config(benchmark::State& state) {
  vdyn::SamplingConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  return cfg;
}

void BM_FeasibleSetSerial(benchmark::State& state) {
  const vdyn::VehicleParams p;
  const auto xi0 = vdyn::rolling_state(20.0, 0.0, p);
  const auto cfg = bench_config(state);
  for (auto _ : state) benchmark::DoNotOptimize(vdyn::feasible_set_serial(xi0, cfg, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FeasibleSetParallel(benchmark::State& state) {
  const vdyn::VehicleParams p;
  const auto xi0 = vdyn::rolling_state(20.0, 0.0, p);
  const auto cfg = bench_config(state);
  for (auto _ : state) benchmark::DoNotOptimize(vdyn::feasible_set(xi0, cfg, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_FeasibleSetSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FeasibleSetParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
