// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mapp/error.hpp"
#include "mapp/metrics.hpp"
#include "oracles.hpp"

using namespace mapp;

TEST(Asr, HandCases) {
  const std::vector<double> same{1.0, 2.0, 3.0};
  EXPECT_EQ(metrics::asr(same, same), 0.0);
  const std::vector<double> two(4, 2.0), one(4, 1.0);
  EXPECT_EQ(metrics::asr(two, one), 1.0);
  const std::vector<double> cb{3.0, 0.0}, ce{1.0, 2.0};
  EXPECT_EQ(metrics::asr(cb, ce), 1.0);
}

TEST(Asr, LengthMismatchAndEmpty) {
  const std::vector<double> a{1.0}, b{1.0, 2.0}, e;
  EXPECT_THROW(metrics::asr(a, b), Error);
  EXPECT_THROW(metrics::asr(e, e), Error);
}

TEST(Asr, NonNegativeAndShiftInvariantWhenSignsKept) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> cb(4), ce(4);
    for (int i = 0; i < 4; ++i) {
      cb[i] = u(rng);
      ce[i] = u(rng);
    }
    EXPECT_GE(metrics::asr(cb, ce), 0.0);
    std::vector<double> hi(4), lo(4);
    for (int i = 0; i < 4; ++i) {
      lo[i] = u(rng);
      hi[i] = lo[i] + 0.1 + u(rng);
    }
    std::vector<double> hi2 = hi, lo2 = lo;
    for (int i = 0; i < 4; ++i) {
      hi2[i] += 3.0;
      lo2[i] += 3.0;
    }
    EXPECT_NEAR(metrics::asr(hi, lo), metrics::asr(hi2, lo2), 1e-12);
  }
}

TEST(Spsc, HandCases) {
  EXPECT_EQ(metrics::spsc(std::vector<double>{0.3, 1.0, 2.0}), 1.0);
  EXPECT_EQ(metrics::spsc(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_EQ(metrics::spsc(std::vector<double>{0.1, 0.0, 0.2, 0.0}), 0.5);
  EXPECT_THROW(metrics::spsc(std::vector<double>{}), Error);
}

TEST(Spsc, ConcatenationIsCountWeightedMean) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(3 + trial % 7), b(5 + trial % 3);
    for (auto& v : a) v = coin(rng) ? 0.5 : 0.0;
    for (auto& v : b) v = coin(rng) ? 0.5 : 0.0;
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double want = (metrics::spsc(a) * a.size() + metrics::spsc(b) * b.size()) / ab.size();
    EXPECT_NEAR(metrics::spsc(ab), want, 1e-12);
  }
}

TEST(Nmse, HandCases) {
  const std::vector<double> t{1.0, -2.0, 0.5};
  EXPECT_EQ(metrics::nmse(t, t), 0.0);
  EXPECT_EQ(metrics::nmse(t, std::vector<double>(3, 0.0)), 1.0);
  EXPECT_EQ(metrics::nmse(std::vector<double>{2.0}, std::vector<double>{1.0}), 0.25);
  EXPECT_THROW(metrics::nmse(std::vector<double>(2, 0.0), t), Error);
  EXPECT_THROW(metrics::nmse(t, std::vector<double>{1.0}), Error);
}

TEST(Nmse, ScaleCovariantAndBatchMean) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> ts, ps;
  double sum = 0.0;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> t(6), p(6);
    for (int i = 0; i < 6; ++i) {
      t[i] = g(rng);
      p[i] = g(rng);
    }
    std::vector<double> ts2(6), ps2(6);
    for (int i = 0; i < 6; ++i) {
      ts2[i] = -3.7 * t[i];
      ps2[i] = -3.7 * p[i];
    }
    const double v = metrics::nmse(t, p);
    EXPECT_NEAR(metrics::nmse(ts2, ps2), v, 1e-12);
    sum += v;
    ts.insert(ts.end(), t.begin(), t.end());
    ps.insert(ps.end(), p.begin(), p.end());
  }
  EXPECT_NEAR(metrics::mean_nmse(ts, ps, 5), sum / 5.0, 1e-12);
}

TEST(MrtCapacities, ClosedFormAndSecrecyOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<cdouble> hb(9), he(9);
    for (auto& v : hb) v = {g(rng), g(rng)};
    for (auto& v : he) v = {g(rng), g(rng)};
    const double noise = 0.2 + 0.05 * trial;
    const auto c = metrics::mrt_capacities(hb, he, noise, 2.0);
    EXPECT_NEAR(c.bob, std::log2(1.0 + 2.0 * oracle::norm_sq(hb) / noise), 1e-9);
    EXPECT_NEAR(metrics::secrecy_rate(hb, he, noise, 2.0), oracle::secrecy(hb, he, noise, 2.0), 1e-9);
  }
}

TEST(MetricsCsv, SixColumnsInTableOrder) {
  metrics::MetricsReport r{"m", 1.5, 0.75, 0.25, 10, 20, 0.5};
  EXPECT_EQ(metrics::csv_header(), "model,asr_bps_hz,spsc,nmse,parameters,flops,inference_ms");
  EXPECT_EQ(metrics::csv_row(r), "m,1.5,0.75,0.25,10,20,0.5");
}
