// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "mapp/pso.hpp"

namespace {

void BM_OptimizePlacement(benchmark::State& state) {
  const mapp::ScenarioConfig cfg;
  const auto snaps = mapp::build_snapshot_sequence(2, cfg, 0);
  const auto problem = mapp::SecrecyProblem::from_snapshot(snaps.front(), cfg);
  mapp::PsoConfig pso;
  pso.swarm_size = static_cast<int>(state.range(0));
  pso.iterations = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(mapp::optimize_placement(problem, pso));
  state.SetItemsProcessed(state.iterations() * pso.swarm_size * pso.iterations);
}
BENCHMARK(BM_OptimizePlacement)->Args({30, 60})->Args({50, 100})->Unit(benchmark::kMillisecond);

void BM_LabelTrajectory(benchmark::State& state) {
  const mapp::ScenarioConfig cfg;
  const auto snaps = mapp::build_snapshot_sequence(3, cfg, 0);
  const mapp::PsoConfig pso;
  for (auto _ : state) benchmark::DoNotOptimize(mapp::label_trajectory(snaps, cfg, pso, 0));
}
BENCHMARK(BM_LabelTrajectory)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
