// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mapp/channel.hpp"
#include "mapp/error.hpp"
#include "oracles.hpp"

using namespace mapp;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLambda = 0.0107;
constexpr double kF = 2.8e10;

double rel_err(cdouble a, cdouble b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

MAPlacement random_placement(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-0.06, 0.06);
  MAPlacement m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, u(rng), u(rng));
  return m;
}

}  // namespace

TEST(SphericalUnitVector, PoleAndEquator) {
  const Vec3 pole = spherical_unit_vector(0.0, 0.0);
  EXPECT_EQ(pole, (Vec3{0.0, 0.0, 1.0}));
  const Vec3 eq = spherical_unit_vector(kPi / 2, 0.0);
  EXPECT_NEAR(eq.x, 1.0, 1e-15);
  EXPECT_NEAR(eq.y, 0.0, 1e-15);
  EXPECT_NEAR(eq.z, 0.0, 1e-15);
}

TEST(SphericalUnitVector, UnitNormAndRoundTrip) {
  const Vec3 v = spherical_unit_vector(0.7, 1.3);
  EXPECT_NEAR(std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z), 1.0, 1e-12);
  EXPECT_NEAR(v.x, std::sin(0.7) * std::cos(1.3), 1e-15);
  EXPECT_NEAR(v.z, std::cos(0.7), 1e-15);
  const auto [theta, phi] = spherical_angles(v);
  EXPECT_NEAR(theta, 0.7, 1e-12);
  EXPECT_NEAR(phi, 1.3, 1e-12);
}

TEST(SphericalUnitVector, RejectsNonFinite) {
  EXPECT_THROW(spherical_unit_vector(std::nan(""), 0.0), Error);
  EXPECT_THROW(spherical_unit_vector(0.0, INFINITY), Error);
}

TEST(ChannelCoefficient, SinglePathAtOrigin) {
  PathSet ps;
  ps.paths.push_back(Path{});
  const cdouble h = channel_coefficient(ps, {0, 0, 0}, 0.0, kLambda, kF);
  EXPECT_DOUBLE_EQ(h.real(), 1.0);
  EXPECT_DOUBLE_EQ(h.imag(), 0.0);
}

TEST(ChannelCoefficient, OrthogonalOffsetLeavesValue) {
  PathSet ps;
  Path p;
  p.gain = {0.3, -0.4};
  p.r_tx = {1.0, 0.0, 0.0};
  p.doppler_hz = 120.0;
  p.delay_s = 3e-9;
  ps.paths.push_back(p);
  const cdouble h0 = channel_coefficient(ps, {0, 0, 0}, 0.01, kLambda, kF);
  const cdouble h1 = channel_coefficient(ps, {0, 0.37, -0.2}, 0.01, kLambda, kF);
  EXPECT_NEAR(std::abs(h0 - h1), 0.0, 1e-15);
}

TEST(ChannelCoefficient, MatchesTermByTermOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    const PathSet ps = oracle::random_paths(rng, 3);
    const Vec3 p{0.0, u(rng), u(rng)};
    const double t = 0.1 * (trial % 20);
    const cdouble got = channel_coefficient(ps, p, t, kLambda, kF);
    const cdouble want = oracle::channel_coefficient(ps, p.x, p.y, p.z, t, kLambda, kF);
    EXPECT_LT(rel_err(got, want), 1e-12) << "trial " << trial;
  }
}

TEST(ChannelCoefficient, RejectsEmptyAndBadWavelength) {
  PathSet empty;
  EXPECT_THROW(channel_coefficient(empty, {}, 0.0, kLambda, kF), Error);
  PathSet one;
  one.paths.push_back(Path{});
  EXPECT_THROW(channel_coefficient(one, {}, 0.0, 0.0, kF), Error);
}

TEST(ChannelVector, ReducesToCoefficient) {
  std::mt19937_64 rng(3);
  const PathSet ps = oracle::random_paths(rng, 4);
  MAPlacement one(1);
  one.set(0, 0.01, -0.02);
  const CVector h = channel_vector(ps, one, 0.2, kLambda, kF);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0], channel_coefficient(ps, one.position(0), 0.2, kLambda, kF));
}

TEST(ChannelVector, IdenticalRowsGiveIdenticalEntries) {
  std::mt19937_64 rng(4);
  const PathSet ps = oracle::random_paths(rng, 6);
  MAPlacement m(3);
  for (int i = 0; i < 3; ++i) m.set(i, 0.015, 0.004);
  const CVector h = channel_vector(ps, m, 0.3, kLambda, kF);
  EXPECT_EQ(h[0], h[1]);
  EXPECT_EQ(h[1], h[2]);
}

TEST(ChannelVector, ThreeByThreeMatchesLoopOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const PathSet ps = oracle::random_paths(rng, 6);
    const MAPlacement m = random_placement(rng, 9);
    const CVector h = channel_vector(ps, m, 0.7, kLambda, kF);
    for (std::size_t n = 0; n < 9; ++n) {
      const cdouble want = oracle::channel_coefficient(ps, 0.0, m.y(n), m.z(n), 0.7, kLambda, kF);
      EXPECT_LT(rel_err(h[n], want), 1e-12);
    }
  }
}

TEST(SpatialChannel, AgreesWithChannelVector) {
  std::mt19937_64 rng(6);
  const PathSet ps = oracle::random_paths(rng, 6);
  const MAPlacement m = random_placement(rng, 9);
  const auto sc = SpatialChannel::resolve(ps, 0.4, kLambda, kF);
  const CVector a = sc.evaluate(m);
  const CVector b = channel_vector(ps, m, 0.4, kLambda, kF);
  for (std::size_t n = 0; n < 9; ++n) EXPECT_LT(rel_err(a[n], b[n]), 1e-11);
}

TEST(ChannelProperties, PhaseLinearityAlongDirection) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    PathSet ps = oracle::random_paths(rng, 1);
    const Vec3 r = ps.paths[0].r_tx;
    const Vec3 p{0.0, 0.01, 0.02};
    const Vec3 q = p + kLambda * r;
    const cdouble a = channel_coefficient(ps, p, 0.1, kLambda, kF);
    const cdouble b = channel_coefficient(ps, q, 0.1, kLambda, kF);
    EXPECT_LT(std::abs(a - b), 1e-9 * std::max(1.0, std::abs(a)));
  }
}

TEST(ChannelProperties, ConjugateSymmetryOfGains) {
  std::mt19937_64 rng(8);
  PathSet ps = oracle::random_paths(rng, 5);
  PathSet neg = ps;
  for (auto& p : neg.paths) p.gain = -p.gain;
  const Vec3 p{0.0, 0.003, -0.011};
  const cdouble a = channel_coefficient(ps, p, 0.5, kLambda, kF);
  const cdouble b = channel_coefficient(neg, p, 0.5, kLambda, kF);
  EXPECT_LT(std::abs(a + b), 1e-14);
}

TEST(MrtBeamformer, AlignedUnitCase) {
  const CVector h{{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  const Beamformer w = mrt_beamformer(h, 1.0);
  EXPECT_NEAR(std::abs(w.w[0] - cdouble(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_EQ(w.w[1], cdouble(0.0, 0.0));
}

TEST(MrtBeamformer, PowerNormalizationAndAlignment) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    CVector h(9);
    for (auto& v : h) v = {g(rng), g(rng)};
    const Beamformer w = mrt_beamformer(h, 4.0);
    const std::vector<cdouble> wv(w.w.begin(), w.w.end());
    EXPECT_NEAR(oracle::norm_sq(wv), 4.0, 1e-9);
    const std::vector<cdouble> hv(h.begin(), h.end());
    const double gain = oracle::inner_sq(hv, wv);
    EXPECT_NEAR(gain / (4.0 * oracle::norm_sq(hv)), 1.0, 1e-9);
  }
}

TEST(MrtBeamformer, ZeroChannelIsDegenerate) {
  const CVector h(4, cdouble{});
  try {
    mrt_beamformer(h, 1.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateChannel);
  }
}

TEST(Capacity, SnrOneGivesOneBit) {
  const CVector h{{2.0, 0.0}};
  const Beamformer w{{{0.5, 0.0}}, 1.0};
  EXPECT_NEAR(capacity(h, w, 1.0), 1.0, 1e-15);
}

TEST(Capacity, ZeroBeamformerGivesZero) {
  const CVector h{{2.0, 1.0}, {0.3, 0.1}};
  const Beamformer w{{cdouble{}, cdouble{}}, 1.0};
  EXPECT_EQ(capacity(h, w, 1.0), 0.0);
}

TEST(Capacity, ClosedFormUnderMrt) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    CVector h(9);
    for (auto& v : h) v = {g(rng), g(rng)};
    const double p = 0.5 + trial * 0.01;
    const double noise = 0.1 + 0.02 * trial;
    const double want = std::log2(1.0 + p * oracle::norm_sq({h.begin(), h.end()}) / noise);
    EXPECT_NEAR(capacity(h, mrt_beamformer(h, p), noise), want, 1e-9);
  }
}

TEST(Capacity, MonotoneInGainAndNoise) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  CVector h(4);
  for (auto& v : h) v = {g(rng), g(rng)};
  const Beamformer w = mrt_beamformer(h, 1.0);
  double prev = INFINITY;
  for (double noise : {0.1, 0.2, 0.5, 1.0, 2.0, 10.0}) {
    const double c = capacity(h, w, noise);
    EXPECT_LE(c, prev);
    prev = c;
  }
  CVector bigger = h;
  for (auto& v : bigger) v *= 1.5;
  EXPECT_GE(capacity(bigger, mrt_beamformer(bigger, 1.0), 1.0), capacity(h, w, 1.0));
}

TEST(Capacity, RejectsNonPositiveNoise) {
  const CVector h{{1.0, 0.0}};
  EXPECT_THROW(capacity(h, mrt_beamformer(h, 1.0), 0.0), Error);
}

TEST(Placement, FeasibilityAndSpacing) {
  std::vector<Region> regions{{-0.02, 0.0, -0.01, 0.01}, {0.0, 0.02, -0.01, 0.01}};
  MAPlacement m(2);
  m.set(0, -0.01, 0.0);
  m.set(1, 0.01, 0.0);
  EXPECT_NEAR(min_pairwise_distance(m), 0.02, 1e-15);
  EXPECT_TRUE(is_feasible(m, regions, 0.01));
  m.set(1, 0.0, 0.0);
  m.set(0, -0.001, 0.0);
  EXPECT_FALSE(is_feasible(m, regions, 0.01));
  m.set(1, 0.03, 0.0);
  m.set(0, -0.01, 0.0);
  EXPECT_FALSE(is_feasible(m, regions, 0.01));
}

TEST(Placement, RowsRoundTripAndRejectNonzeroX) {
  MAPlacement m(2);
  m.set(0, 0.1, 0.2);
  m.set(1, -0.3, 0.4);
  const auto rows = m.rows();
  EXPECT_EQ(MAPlacement::from_rows(rows), m);
  auto bad = rows;
  bad[0] = 1e-3;
  EXPECT_THROW(MAPlacement::from_rows(bad), Error);
}
