// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>

#include "mapp/error.hpp"
#include "mapp/metrics.hpp"
#include "mapp/pso.hpp"
#include "oracles.hpp"

using namespace mapp;

namespace {

Snapshot symmetric_snapshot(const ScenarioConfig& c) {
  auto snaps = build_snapshot_sequence(2, c);
  Snapshot s = snaps[0];
  s.eve_paths = s.bob_paths;
  return s;
}

PsoConfig small_pso(std::uint64_t seed = 1) {
  PsoConfig p;
  p.swarm_size = 20;
  p.iterations = 30;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(SecrecyFitness, EqualCapacitiesClampToZero) {
  ScenarioConfig c;
  const Snapshot s = symmetric_snapshot(c);
  const MAPlacement centers = region_centers(array_regions(c));
  EXPECT_NEAR(secrecy_fitness(centers, s, c, 1e3), 0.0, 1e-12);
}

TEST(SecrecyFitness, CoincidentPairIsPenalized) {
  ScenarioConfig c;
  const Snapshot s = symmetric_snapshot(c);
  const auto regions = array_regions(c);
  const double lambda = c.lambda_m();
  MAPlacement spaced = region_centers(regions);
  spaced.set(0, regions[0].y_max - 0.25 * lambda, spaced.z(0));
  spaced.set(1, regions[1].y_min + 0.25 * lambda, spaced.z(1));
  MAPlacement coincident = spaced;
  coincident.set(1, coincident.y(0), coincident.z(0));
  coincident.set(0, regions[0].y_max, spaced.z(0));
  coincident.set(1, regions[0].y_max, spaced.z(0));
  EXPECT_NEAR(min_pairwise_distance(spaced), 0.5 * lambda, 1e-12);
  EXPECT_LT(secrecy_fitness(coincident, s, c, 1e3), secrecy_fitness(spaced, s, c, 1e3));
}

TEST(SecrecyFitness, MatchesMetricsOnFeasiblePlacements) {
  ScenarioConfig c;
  const auto snaps = build_snapshot_sequence(5, c, 1);
  const auto regions = array_regions(c);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.25, 0.75);
  for (int trial = 0; trial < 20; ++trial) {
    MAPlacement m(regions.size());
    for (std::size_t n = 0; n < regions.size(); ++n) {
      const Region& r = regions[n];
      m.set(n, r.y_min + u(rng) * (r.y_max - r.y_min), r.z_min + u(rng) * (r.z_max - r.z_min));
    }
    ASSERT_TRUE(is_feasible(m, regions, c.lambda_m()));
    const Snapshot& s = snaps[static_cast<std::size_t>(trial) % snaps.size()];
    const CVector hb = channel_vector(s.bob_paths, m, s.t, c.lambda_m(), c.f_hz);
    const CVector he = channel_vector(s.eve_paths, m, s.t, c.lambda_m(), c.f_hz);
    const double want = metrics::secrecy_rate(hb, he, s.noise_power, c.p_max);
    EXPECT_NEAR(secrecy_fitness(m, s, c, 1e3), want, 1e-12);
  }
}

TEST(ConstraintViolation, ZeroIffFeasible) {
  ScenarioConfig c;
  const auto regions = array_regions(c);
  const MAPlacement centers = region_centers(regions);
  EXPECT_EQ(constraint_violation(centers.yz(), regions, c.lambda_m()), 0.0);
  MAPlacement out = centers;
  out.set(0, regions[0].y_min - c.lambda_m(), out.z(0));
  EXPECT_NEAR(constraint_violation(out.yz(), regions, c.lambda_m()), 1.0, 1e-12);
}

TEST(OptimizePlacement, SingleAntennaNearGridBest) {
  ScenarioConfig c;
  c.n_h = c.n_v = 1;
  const auto regions = array_regions(c);
  int good = 0;
  const int n = 20;
  for (int i = 0; i < n; ++i) {
    const auto snaps = build_snapshot_sequence(31, c, static_cast<std::uint64_t>(i));
    const Snapshot& s = snaps[0];
    const auto grid = oracle::grid_search_single(s.bob_paths, s.eve_paths, regions[0], s.t,
                                                 c.lambda_m(), c.f_hz, s.noise_power, c.p_max, 21);
    PsoConfig p;
    p.seed = 100 + i;
    const LabelRecord rec = optimize_placement(SecrecyProblem::from_snapshot(s, c), p);
    if (rec.secrecy_rate >= 0.98 * grid.value) ++good;
  }
  EXPECT_GE(good, 19);
}

TEST(OptimizePlacement, FeasibleMonotoneAndBeatsCenters) {
  ScenarioConfig c;
  const auto snaps = build_snapshot_sequence(3, c, 0);
  const auto centers = region_centers(array_regions(c));
  for (std::size_t i = 0; i < 5; ++i) {
    const auto problem = SecrecyProblem::from_snapshot(snaps[i], c);
    const LabelRecord rec = optimize_placement(problem, small_pso(i + 1));
    EXPECT_TRUE(rec.feasible);
    EXPECT_TRUE(is_feasible(rec.placement, problem.regions, problem.lambda_m));
    ASSERT_EQ(rec.fitness_history.size(), 31u);
    for (std::size_t k = 1; k < rec.fitness_history.size(); ++k) {
      EXPECT_GE(rec.fitness_history[k], rec.fitness_history[k - 1]);
    }
    EXPECT_NEAR(rec.secrecy_rate, problem.secrecy(rec.placement), 1e-15);
    EXPECT_GE(rec.secrecy_rate + 1e-12, 0.0);
    (void)centers;
  }
}

TEST(OptimizePlacement, DeterministicPerSeed) {
  ScenarioConfig c;
  const auto snaps = build_snapshot_sequence(3, c, 0);
  const auto problem = SecrecyProblem::from_snapshot(snaps[4], c);
  const LabelRecord a = optimize_placement(problem, small_pso(7));
  const LabelRecord b = optimize_placement(problem, small_pso(7));
  EXPECT_EQ(a.placement, b.placement);
  EXPECT_EQ(a.fitness_history, b.fitness_history);
}

TEST(OptimizePlacement, NanChannelIsNumericalError) {
  ScenarioConfig c;
  const auto snaps = build_snapshot_sequence(3, c, 0);
  auto problem = SecrecyProblem::from_snapshot(snaps[0], c);
  for (auto& v : problem.bob.coef) v = {std::nan(""), 0.0};
  try {
    optimize_placement(problem, small_pso());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(RepairSpacing, RestoresFeasibility) {
  ScenarioConfig c;
  const auto regions = array_regions(c);
  MAPlacement m = region_centers(regions);
  m.set(0, regions[0].y_max, regions[0].z_max);
  m.set(1, regions[1].y_min, regions[1].z_max);
  m.set(3, regions[3].y_max, regions[3].z_min);
  ASSERT_FALSE(is_feasible(m, regions, c.lambda_m()));
  EXPECT_TRUE(is_feasible(repair_spacing(m, regions, c.lambda_m()), regions, c.lambda_m()));
}

TEST(LabelTrajectory, OneFeasibleRecordPerSnapshot) {
  ScenarioConfig c;
  const auto snaps = build_snapshot_sequence(6, c, 0);
  const auto labels = label_trajectory(snaps, c, small_pso(), 0);
  ASSERT_EQ(labels.size(), 20u);
  const auto regions = array_regions(c);
  for (const auto& r : labels) {
    EXPECT_TRUE(r.feasible);
    EXPECT_TRUE(is_feasible(r.placement, regions, c.lambda_m()));
  }
  EXPECT_THROW(label_trajectory({}, c, small_pso()), Error);
}

TEST(LabelTrajectory, WarmStartHelpsOnSlowChannels) {
  ScenarioConfig c;
  c.speed_kmh_min = 0.01;
  c.speed_kmh_max = 0.02;
  c.ar_rho = 1.0;
  c.snapshots_per_trajectory = 8;
  PsoConfig p;
  p.swarm_size = 8;
  p.iterations = 8;
  double warm = 0.0, cold = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto snaps = build_snapshot_sequence(12, c, t);
    p.warm_start = true;
    for (const auto& r : label_trajectory(snaps, c, p, t)) warm += r.secrecy_rate;
    p.warm_start = false;
    for (const auto& r : label_trajectory(snaps, c, p, t)) cold += r.secrecy_rate;
  }
  EXPECT_GE(warm, cold);
}

TEST(LabelTrajectory, LabelsBeatStaticCenters) {
  ScenarioConfig c;
  const auto centers = region_centers(array_regions(c));
  double lab = 0.0, fixed = 0.0;
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto snaps = build_snapshot_sequence(13, c, t);
    const auto labels = label_trajectory(snaps, c, small_pso(), t);
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      lab += labels[i].secrecy_rate;
      fixed += SecrecyProblem::from_snapshot(snaps[i], c).secrecy(centers);
    }
  }
  EXPECT_GT(lab, fixed);
}

TEST(PsoConfig, ValidationAndKeys) {
  PsoConfig p;
  p.inertia = 1.0;
  EXPECT_THROW(p.validate(), Error);
  KeyValues kv = KeyValues::parse("pso_swarm_size = 12\npso_iterations = 3\n");
  const PsoConfig q = PsoConfig::from_kv(kv);
  EXPECT_EQ(q.swarm_size, 12);
  EXPECT_EQ(q.iterations, 3);
  EXPECT_THROW(PsoConfig::from_kv(KeyValues::parse("pso_swarm_size = 0\n")), Error);
}
