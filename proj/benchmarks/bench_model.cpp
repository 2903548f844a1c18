// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <numeric>

#include "mapp/learn/experiments.hpp"

namespace {

using namespace mapp;

const Dataset& sample() {
  static const Dataset ds = [] {
    GenerationPlan plan;
    plan.n_trajectories = 8;
    plan.pso.swarm_size = 10;
    plan.pso.iterations = 10;
    return generate_splits(plan, 1, 1).train;
  }();
  return ds;
}

void run_forward(benchmark::State& state, const std::string& kind) {
  torch::set_num_threads(1);
  const Dataset& ds = sample();
  const learn::ModelConfig cfg = learn::fit_to_dataset(learn::ModelConfig{}, ds);
  auto model = learn::build_predictor(kind, cfg, 1);
  model->set_placement_stats(ds.stats);
  model->eval();
  std::vector<std::size_t> idx(std::min<std::size_t>(static_cast<std::size_t>(state.range(0)), ds.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const learn::Batch b = learn::make_batch(ds, idx, torch::kFloat32);
  torch::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(idx.size()));
}

void BM_RoleAwareForward(benchmark::State& state) { run_forward(state, "RoleAware"); }
void BM_VanillaForward(benchmark::State& state) { run_forward(state, "VanillaTransformer"); }
void BM_LstmForward(benchmark::State& state) { run_forward(state, "LSTM"); }

BENCHMARK(BM_RoleAwareForward)->Arg(1)->Arg(8)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_VanillaForward)->Arg(1)->Arg(8)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LstmForward)->Arg(1)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
