// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "mapp/metrics.hpp"
#include "mapp/scenario.hpp"

namespace {

struct Fixture {
  mapp::ScenarioConfig cfg;
  std::vector<mapp::Snapshot> snaps = mapp::build_snapshot_sequence(1, cfg, 0);
  mapp::MAPlacement centers = mapp::region_centers(mapp::array_regions(cfg));
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ChannelVector(benchmark::State& state) {
  const auto& f = fixture();
  const auto& s = f.snaps.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mapp::channel_vector(s.bob_paths, f.centers, s.t, f.cfg.lambda_m(), f.cfg.f_hz));
  }
}
BENCHMARK(BM_ChannelVector);

void BM_SpatialChannelEvaluate(benchmark::State& state) {
  const auto& f = fixture();
  const auto& s = f.snaps.front();
  const auto sc = mapp::SpatialChannel::resolve(s.bob_paths, s.t, f.cfg.lambda_m(), f.cfg.f_hz);
  std::vector<mapp::cdouble> out(f.centers.size());
  for (auto _ : state) {
    sc.evaluate(f.centers.yz(), out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_SpatialChannelEvaluate);

void BM_SecrecyRate(benchmark::State& state) {
  const auto& f = fixture();
  const auto& s = f.snaps.front();
  const auto hb = mapp::channel_vector(s.bob_paths, f.centers, s.t, f.cfg.lambda_m(), f.cfg.f_hz);
  const auto he = mapp::channel_vector(s.eve_paths, f.centers, s.t, f.cfg.lambda_m(), f.cfg.f_hz);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mapp::metrics::secrecy_rate(hb, he, s.noise_power, f.cfg.p_max));
  }
}
BENCHMARK(BM_SecrecyRate);

void BM_SnapshotSequence(benchmark::State& state) {
  const mapp::ScenarioConfig cfg;
  std::uint64_t id = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mapp::build_snapshot_sequence(1, cfg, id++));
}
BENCHMARK(BM_SnapshotSequence)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
