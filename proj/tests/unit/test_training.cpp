// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "learn_fixtures.hpp"
#include "mapp/error.hpp"
#include "mapp/learn/training.hpp"
#include "mapp/metrics.hpp"

using namespace mapp;
using namespace mapp::learn;
using mapp::testing::toy_model_config;
using mapp::testing::toy_splits;

namespace {

const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);

Batch toy_batch(const Dataset& ds, std::size_t count) {
  std::vector<std::size_t> idx(std::min(count, ds.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(ds, idx, torch::kFloat64);
}

// [1, F, 3N] copy of the region centers.
torch::Tensor centers_like(const Dataset& ds, std::int64_t b) {
  const MAPlacement c = region_centers(array_regions(ds.scenario));
  std::vector<double> flat;
  for (std::size_t n = 0; n < c.size(); ++n) {
    flat.insert(flat.end(), {0.0, c.y(n), c.z(n)});
  }
  const auto one = torch::tensor(flat, kF64).view({1, 1, -1});
  return one.expand({b, ds.shape.f_out, one.size(2)}).clone();
}

Geometry open_geometry(int n, double lambda) {
  Geometry g;
  g.y_min = torch::full({n}, -1.0, kF64);
  g.y_max = torch::full({n}, 1.0, kF64);
  g.z_min = torch::full({n}, -1.0, kF64);
  g.z_max = torch::full({n}, 1.0, kF64);
  g.lambda_m = lambda;
  return g;
}

TrainConfig toy_train(int epochs = 10) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.max_lr = 1e-3;
  c.warmup_epochs = 1;
  c.seed = 3;
  c.double_precision = true;
  c.loss_warmup_end = 2;
  c.loss_ramp_end = 8;
  return c;
}

}  // namespace

// --- NMSE --------------------------------------------------------------------

TEST(LossNmse, IdentityAndZeroPrediction) {
  const auto t = torch::randn({3, 2, 12}, kF64);
  EXPECT_EQ(loss_nmse(t, t).item<double>(), 0.0);
  EXPECT_DOUBLE_EQ(loss_nmse(torch::zeros_like(t), t).item<double>(), 1.0);
}

TEST(LossNmse, MatchesPerSampleMetric) {
  const auto t = torch::randn({5, 4, 27}, kF64);
  const auto p = t + 0.3 * torch::randn({5, 4, 27}, kF64);
  double want = 0.0;
  for (int b = 0; b < 5; ++b) {
    const auto tb = t[b].contiguous();
    const auto pb = p[b].contiguous();
    want += metrics::nmse({tb.data_ptr<double>(), 108}, {pb.data_ptr<double>(), 108});
  }
  want /= 5.0;
  EXPECT_NEAR(loss_nmse(p, t).item<double>(), want, 1e-12);
}

TEST(LossNmse, ShapeMismatchThrows) {
  EXPECT_THROW(loss_nmse(torch::zeros({1, 2, 3}), torch::zeros({1, 2, 6})), Error);
}

// --- secrecy -----------------------------------------------------------------

TEST(LossSecrecy, EqualChannelsGiveZero) {
  Batch b = toy_batch(toy_splits().train, 8);
  b.eve_coef_re = b.bob_coef_re;
  b.eve_coef_im = b.bob_coef_im;
  b.eve_ky = b.bob_ky;
  b.eve_kz = b.bob_kz;
  EXPECT_NEAR(loss_secrecy(b.target, b, 1.0).item<double>(), 0.0, 1e-12);
}

TEST(LossSecrecy, GapMatchesMetricsCapacities) {
  const Dataset& ds = toy_splits().train;
  const Batch b = toy_batch(ds, 4);
  const auto gap = secrecy_gap(b.target, b, ds.scenario.p_max);
  for (std::size_t w = 0; w < 4; ++w) {
    for (int f = 0; f < ds.shape.f_out; ++f) {
      const auto& ph = ds.physics[w];
      const auto step = static_cast<std::size_t>(ds.shape.t_in + f);
      const std::size_t n3 = static_cast<std::size_t>(3 * ds.n_antennas());
      std::vector<double> yz;
      for (std::size_t k = 0; k < n3; ++k) {
        if (k % 3 != 0) yz.push_back(ds.windows[w].target[static_cast<std::size_t>(f) * n3 + k]);
      }
      const MAPlacement m = MAPlacement::from_yz(yz);
      const auto cap = metrics::mrt_capacities(ph.bob[step].evaluate(m), ph.eve[step].evaluate(m),
                                               ph.noise_power[step], ds.scenario.p_max);
      EXPECT_NEAR(gap[static_cast<std::int64_t>(w)][f].item<double>(), cap.bob - cap.eve, 1e-9);
    }
  }
}

TEST(LossSecrecy, LabelsBeatRegionCentersOnMostWindows) {
  GenerationPlan plan = mapp::testing::toy_plan(40, 8);
  plan.pso.swarm_size = 20;
  plan.pso.iterations = 20;
  Dataset all = generate_dataset(plan, 21, 1);
  all.stats = fit_norm_stats(all.windows);
  ASSERT_GE(all.size(), 100u);
  std::vector<std::size_t> idx(100);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Batch b = make_batch(all, idx, torch::kFloat64);
  const auto label = secrecy_gap(b.target, b, all.scenario.p_max).mean(1);
  const auto center = secrecy_gap(centers_like(all, b.size()), b, all.scenario.p_max).mean(1);
  // Loss is the negated gap: label loss <= center loss means gap_label >= gap_center.
  const double frac = (label >= center).to(torch::kFloat64).mean().item<double>();
  EXPECT_GE(frac, 0.8) << "windows: " << all.size();
}

TEST(LossSecrecy, CoordinateGradientMatchesFiniteDifference) {
  const Dataset& ds = toy_splits().train;
  const Batch b = toy_batch(ds, 4);
  auto pred = (b.target + 0.002 * torch::randn_like(b.target)).detach().requires_grad_(true);
  loss_secrecy(pred, b, 1.0).backward();
  const double h = 1e-7;
  for (std::int64_t k : {1, 2, 4, 5, 10, 11}) {
    auto plus = pred.detach().clone();
    auto minus = pred.detach().clone();
    plus[0][0][k] += h;
    minus[0][0][k] -= h;
    const double fd =
        (loss_secrecy(plus, b, 1.0).item<double>() - loss_secrecy(minus, b, 1.0).item<double>()) /
        (2 * h);
    const double g = pred.grad()[0][0][k].item<double>();
    EXPECT_LT(std::abs(g - fd), 1e-4 * std::max(std::abs(fd), 1e-3)) << "coordinate " << k;
  }
}

// --- constraints ---------------------------------------------------------------

TEST(LossConstraints, FeasiblePlacementIsZero) {
  const Dataset& ds = toy_splits().train;
  const Geometry g = Geometry::from_scenario(ds.scenario, torch::kFloat64);
  EXPECT_EQ(loss_constraints(centers_like(ds, 2), g).item<double>(), 0.0);
  // Stored labels are float32, so edge placements may round just outside.
  const Batch b = toy_batch(ds, 8);
  EXPECT_LT(loss_constraints(b.target, g).item<double>(), 1e-15);
}

TEST(LossConstraints, CoincidentPairIsHalfWavelengthSquared) {
  const double lambda = 0.01;
  const Geometry g = open_geometry(3, lambda);
  // Antennas at (0,0), (0,0) and far away.
  auto p = torch::tensor({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5}, kF64).view({1, 1, 9});
  EXPECT_NEAR(loss_constraints(p, g).item<double>(), std::pow(lambda / 2, 2), 1e-18);
  // Three coincident antennas form three pairs.
  auto q = torch::zeros({1, 1, 9}, kF64);
  EXPECT_NEAR(loss_constraints(q, g).item<double>(), 3 * std::pow(lambda / 2, 2), 1e-18);
}

TEST(LossConstraints, DecreasesAsPairSeparates) {
  const double lambda = 0.01;
  const Geometry g = open_geometry(2, lambda);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20; ++i) {
    const double d = 0.5 * lambda * i / 20.0;
    auto p = torch::tensor({0.0, 0.0, 0.0, 0.0, d, 0.0}, kF64).view({1, 1, 6});
    const double v = loss_constraints(p, g).item<double>();
    if (i < 20) {
      EXPECT_LT(v, prev) << "step " << i;
    } else {
      EXPECT_NEAR(v, 0.0, 1e-20);
    }
    prev = v;
  }
}

TEST(LossConstraints, RegionExcessIsSquaredDistance) {
  const Geometry g = open_geometry(1, 0.01);
  auto p = torch::tensor({0.0, 1.5, -1.2}, kF64).view({1, 1, 3});
  EXPECT_NEAR(loss_constraints(p, g).item<double>(), 0.25 + 0.04, 1e-12);
}

TEST(CompositeLoss, IsWeightedSum) {
  const Dataset& ds = toy_splits().train;
  const Batch b = toy_batch(ds, 6);
  const Geometry g = Geometry::from_scenario(ds.scenario, torch::kFloat64);
  const auto pred = b.target + 0.01 * torch::randn_like(b.target);
  const LossWeights w{0.3, 0.9, 2.0};
  const LossTerms t = composite_loss(pred, b, g, w);
  EXPECT_NEAR(t.total.item<double>(),
              0.3 * t.nmse.item<double>() + 0.9 * t.secrecy.item<double>() +
                  2.0 * t.constraint.item<double>(),
              1e-12);
}

// --- schedules -----------------------------------------------------------------

TEST(ScheduleWeights, Anchors) {
  const TrainConfig c;
  EXPECT_EQ(schedule_weights(1, c), (LossWeights{1.0, 0.1, 1.0}));
  EXPECT_EQ(schedule_weights(10, c), (LossWeights{1.0, 0.1, 1.0}));
  EXPECT_EQ(schedule_weights(60, c), (LossWeights{0.3, 1.0, 1.0}));
  EXPECT_EQ(schedule_weights(100, c), (LossWeights{0.3, 1.0, 1.0}));
}

TEST(ScheduleWeights, MidpointInterpolates) {
  const TrainConfig c;
  const LossWeights w = schedule_weights(35, c);
  const double u = (35.0 - 10.0) / (60.0 - 10.0);
  EXPECT_NEAR(w.alpha, 1.0 + u * (0.3 - 1.0), 1e-15);
  EXPECT_NEAR(w.beta, 0.1 + u * (1.0 - 0.1), 1e-15);
  EXPECT_NEAR(w.alpha, 0.65, 1e-15);
  EXPECT_NEAR(w.beta, 0.55, 1e-15);
  EXPECT_EQ(w.gamma, 1.0);
}

TEST(ScheduleWeights, ContinuousAcrossPhaseBoundaries) {
  const TrainConfig c;
  const double max_step_alpha = 0.7 / 50.0 + 1e-12;
  const double max_step_beta = 0.9 / 50.0 + 1e-12;
  for (int e = 1; e < c.epochs; ++e) {
    const LossWeights a = schedule_weights(e, c);
    const LossWeights b = schedule_weights(e + 1, c);
    EXPECT_LE(std::abs(a.alpha - b.alpha), max_step_alpha) << e;
    EXPECT_LE(std::abs(a.beta - b.beta), max_step_beta) << e;
    EXPECT_GT(b.alpha + b.beta + b.gamma, 0.0);
  }
}

TEST(ScheduleWeights, OutOfRangeEpochThrows) {
  const TrainConfig c;
  for (int e : {0, -3, 101}) {
    try {
      schedule_weights(e, c);
      FAIL() << e;
    } catch (const Error& err) {
      EXPECT_EQ(err.kind(), ErrorKind::kInvalidArgument);
    }
  }
}

TEST(ScheduleWeights, NmseOnlyMode) {
  TrainConfig c;
  c.loss_mode = LossMode::kNmseOnly;
  for (int e : {1, 30, 100}) EXPECT_EQ(schedule_weights(e, c), (LossWeights{1.0, 0.0, 0.0}));
}

TEST(ScheduleLr, WarmupAndCosineEndpoints) {
  const TrainConfig c;  // 100 epochs, 10 warmup
  const std::int64_t total = 1000;
  const std::int64_t warm = 100;
  EXPECT_EQ(schedule_lr(0, total, c), 0.0);
  EXPECT_NEAR(schedule_lr(50, total, c), 0.5 * c.max_lr, 1e-18);
  EXPECT_DOUBLE_EQ(schedule_lr(warm, total, c), c.max_lr);
  EXPECT_NEAR(schedule_lr(total - 1, total, c), c.max_lr / 100.0, 1e-12);
  // Cosine midpoint sits halfway between the two levels.
  const std::int64_t mid = warm + (total - 1 - warm) / 2;
  const double progress = static_cast<double>(mid - warm) / static_cast<double>(total - 1 - warm);
  const double want = c.max_lr / 100 + 0.5 * (c.max_lr - c.max_lr / 100) *
                                           (1 + std::cos(std::acos(-1.0) * progress));
  EXPECT_NEAR(schedule_lr(mid, total, c), want, 1e-15);
  for (std::int64_t s = warm; s + 1 < total; ++s) {
    EXPECT_GE(schedule_lr(s, total, c), schedule_lr(s + 1, total, c));
  }
}

TEST(TrainConfig, ValidatesWarmup) {
  TrainConfig c;
  c.warmup_epochs = c.epochs;
  EXPECT_THROW(c.validate(), Error);
}

TEST(TrainConfig, HarnessExcludesLossWeights) {
  TrainConfig a;
  TrainConfig b = a;
  b.loss_mode = LossMode::kNmseOnly;
  b.end = {1.0, 0.0, 0.0};
  EXPECT_EQ(a.harness_kv().hash(), b.harness_kv().hash());
  b.batch_size = 17;
  EXPECT_NE(a.harness_kv().hash(), b.harness_kv().hash());
}

// --- fit -----------------------------------------------------------------------

TEST(Fit, ToyRunConvergesAndRecomposes) {
  const auto& s = toy_splits();
  torch::manual_seed(1);
  RoleAwareModel m(toy_model_config());
  const TrainConfig c = toy_train();
  const FitResult r = fit(m, s.train, s.valid, c);
  ASSERT_EQ(r.curves.size(), 10u);
  EXPECT_LT(r.curves.back().total, r.curves.front().total);
  EXPECT_FALSE(r.steps.empty());
  for (const auto& st : r.steps) {
    const double re = st.weights.alpha * st.nmse + st.weights.beta * st.secrecy +
                      st.weights.gamma * st.constraint;
    EXPECT_NEAR(st.total, re, 1e-9) << "step " << st.step;
    EXPECT_GE(st.nmse, 0.0);
    EXPECT_GE(st.constraint, 0.0);
    EXPECT_EQ(st.weights, schedule_weights(st.epoch, c));
  }
  EXPECT_LE(r.curves.back().constraint, 2e-5);
  EXPECT_GE(r.best_epoch, 1);
  EXPECT_LE(r.best_epoch, 10);
}

TEST(Fit, RestoresBestValidationState) {
  const auto& s = toy_splits();
  torch::manual_seed(2);
  RoleAwareModel m(toy_model_config());
  const TrainConfig c = toy_train(6);
  const FitResult r = fit(m, s.train, s.valid, c);
  torch::NoGradGuard guard;
  const Batch v = make_batch(s.valid, torch::kFloat64);
  const Geometry g = Geometry::from_scenario(s.valid.scenario, torch::kFloat64);
  const LossTerms t = composite_loss(m.forward(v), v, g, c.end);
  const double objective = c.end.alpha * t.nmse.item<double>() +
                           c.end.beta * t.secrecy.item<double>() +
                           c.end.gamma * t.constraint.item<double>();
  EXPECT_NEAR(objective, r.best_objective, 1e-12);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& e : r.curves) lowest = std::min(lowest, e.valid_objective);
  EXPECT_EQ(lowest, r.best_objective);
}

TEST(Fit, SameSeedReproducesCurvesBitwise) {
  const auto& s = toy_splits();
  auto run = [&] {
    torch::manual_seed(4);
    RoleAwareModel m(toy_model_config());
    TrainConfig c = toy_train(3);
    c.double_precision = false;
    const FitResult r = fit(m, s.train, s.valid, c);
    return curves_csv(r) + steps_csv(r);
  };
  EXPECT_EQ(run(), run());
}

TEST(Fit, NonFiniteLossIsNumericalError) {
  const auto& s = toy_splits();
  RoleAwareModel m(toy_model_config());
  {
    torch::NoGradGuard g;
    m.backbone->head->bias.fill_(std::numeric_limits<float>::quiet_NaN());
  }
  try {
    fit(m, s.train, s.valid, toy_train(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Fit, RequiresStatistics) {
  const auto& s = toy_splits();
  Dataset train = s.train;
  train.stats = NormStats{};
  RoleAwareModel m(toy_model_config());
  EXPECT_THROW(fit(m, train, s.valid, toy_train(2)), Error);
}

TEST(Fit, CurvesCsvHasOneRowPerEpoch) {
  FitResult r;
  r.curves.resize(3);
  const std::string csv = curves_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("epoch,alpha,beta,gamma,l_total,l_nmse,l_secrecy,l_constraint", 0), 0u);
}

TEST(GradientCheck, CompositeLossMatchesFiniteDifferences) {
  const auto r = mapp::testing::composite_gradient_check(5, 50);
  EXPECT_EQ(r.checked, 50);
  EXPECT_GE(r.informative, 25);
  EXPECT_LT(r.max_rel_err, 1e-4);
}
