#include <benchmark/benchmark.h>

#include <omp.h>

#include "rlcekf/scenario.hpp"

namespace {

using rlcekf::CompensatorPolicy;
using rlcekf::Execution;
using rlcekf::FilterKind;
using rlcekf::ScenarioSpec;

ScenarioSpec bench_spec(std::size_t runs) {
  ScenarioSpec s;
  s.runs = runs;
  s.duration = 5.0;
  s.filters = {FilterKind::kEkf, FilterKind::kCf, FilterKind::kRlcEkf};
  return s;
}

const CompensatorPolicy& bench_policy() {
  static const CompensatorPolicy p = CompensatorPolicy::create(rlcekf::PolicyShape{}, 1);
  return p;
}

void run(benchmark::State& state, Execution execution) {
  const ScenarioSpec spec = bench_spec(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rlcekf::run_scenario(spec, &bench_policy(), execution));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = execution == Execution::kParallel ? omp_get_max_threads() : 1;
}

void BM_ScenarioSerial(benchmark::State& state) { run(state, Execution::kSerial); }
void BM_ScenarioParallel(benchmark::State& state) { run(state, Execution::kParallel); }

BENCHMARK(BM_ScenarioSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScenarioParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
