// SPDX-License-Identifier: Apache-2.0
#include "mapp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mapp/error.hpp"

namespace mapp {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(Vec3 a) {
  double n = norm(a);
  require(n > 0.0 && std::isfinite(n), ErrorKind::kGeometry, "cannot normalize a zero vector");
  return (1.0 / n) * a;
}

bool is_finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

MAPlacement MAPlacement::from_yz(std::span<const double> yz) {
  require(yz.size() % 2 == 0, ErrorKind::kInvalidArgument, "yz vector must have even length");
  MAPlacement p(yz.size() / 2);
  std::copy(yz.begin(), yz.end(), p.yz_.begin());
  return p;
}

MAPlacement MAPlacement::from_rows(std::span<const double> rows) {
  require(rows.size() % 3 == 0, ErrorKind::kInvalidArgument, "placement rows must be N x 3");
  MAPlacement p(rows.size() / 3);
  for (std::size_t n = 0; n < p.size(); ++n) {
    require(rows[3 * n] == 0.0, ErrorKind::kInvalidArgument,
            "placement x coordinate must be zero in the array frame");
    p.set(n, rows[3 * n + 1], rows[3 * n + 2]);
  }
  return p;
}

std::vector<double> MAPlacement::rows() const {
  std::vector<double> out(3 * size(), 0.0);
  for (std::size_t n = 0; n < size(); ++n) {
    out[3 * n + 1] = y(n);
    out[3 * n + 2] = z(n);
  }
  return out;
}

double min_pairwise_distance(const MAPlacement& placement) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < placement.size(); ++a) {
    for (std::size_t b = a + 1; b < placement.size(); ++b) {
      best = std::min(best, std::hypot(placement.y(a) - placement.y(b),
                                       placement.z(a) - placement.z(b)));
    }
  }
  return best;
}

bool is_feasible(const MAPlacement& placement, std::span<const Region> regions,
                 double lambda_m, double tol) {
  if (placement.size() != regions.size()) return false;
  for (std::size_t n = 0; n < placement.size(); ++n) {
    if (!regions[n].contains(placement.y(n), placement.z(n), tol)) return false;
  }
  return min_pairwise_distance(placement) >= 0.5 * lambda_m - tol;
}

MAPlacement region_centers(std::span<const Region> regions) {
  MAPlacement p(regions.size());
  for (std::size_t n = 0; n < regions.size(); ++n) {
    p.set(n, regions[n].center_y(), regions[n].center_z());
  }
  return p;
}

Vec3 spherical_unit_vector(double theta_rad, double phi_rad) {
  require(std::isfinite(theta_rad) && std::isfinite(phi_rad), ErrorKind::kInvalidArgument,
          "spherical angles must be finite");
  const double st = std::sin(theta_rad);
  return {st * std::cos(phi_rad), st * std::sin(phi_rad), std::cos(theta_rad)};
}

std::pair<double, double> spherical_angles(Vec3 unit) {
  const double z = std::clamp(unit.z, -1.0, 1.0);
  return {std::acos(z), std::atan2(unit.y, unit.x)};
}

namespace {

// Fractional part of a * b in cycles, carrying the rounding error of the
// product so large Doppler and delay phases keep full precision.
double frac_cycles(double a, double b) {
  const double p = a * b;
  const double e = std::fma(a, b, -p);
  return (p - std::nearbyint(p)) + e;
}

}  // namespace

cdouble channel_coefficient(const PathSet& paths, Vec3 p_n, double t_s, double lambda_m,
                            double f_hz) {
  require(!paths.paths.empty(), ErrorKind::kInvalidArgument, "empty path set");
  require(lambda_m > 0.0, ErrorKind::kInvalidArgument, "wavelength must be positive");
  cdouble h{0.0, 0.0};
  for (const auto& p : paths.paths) {
    const double cycles = dot(p.r_tx, p_n) / lambda_m + frac_cycles(p.doppler_hz, t_s) +
                          frac_cycles(f_hz, p.delay_s);
    const double phase = kTwoPi * cycles;
    h += p.gain * std::polar(1.0, phase);
  }
  return h;
}

CVector channel_vector(const PathSet& paths, const MAPlacement& placement, double t_s,
                       double lambda_m, double f_hz) {
  CVector h(placement.size());
  for (std::size_t n = 0; n < placement.size(); ++n) {
    h[n] = channel_coefficient(paths, placement.position(n), t_s, lambda_m, f_hz);
  }
  return h;
}

Beamformer mrt_beamformer(std::span<const cdouble> h_bob, double p_max) {
  require(p_max > 0.0, ErrorKind::kInvalidArgument, "p_max must be positive");
  double energy = 0.0;
  for (auto v : h_bob) energy += std::norm(v);
  require(energy > 0.0 && std::isfinite(energy), ErrorKind::kDegenerateChannel,
          "MRT toward a zero channel");
  const double scale = std::sqrt(p_max / energy);
  Beamformer bf;
  bf.p_max = p_max;
  bf.w.reserve(h_bob.size());
  for (auto v : h_bob) bf.w.push_back(scale * v);
  return bf;
}

double capacity(std::span<const cdouble> h, const Beamformer& w, double noise_power) {
  require(noise_power > 0.0, ErrorKind::kInvalidArgument, "noise power must be positive");
  require(h.size() == w.w.size(), ErrorKind::kInvalidArgument, "channel/beamformer size mismatch");
  cdouble g{0.0, 0.0};
  for (std::size_t n = 0; n < h.size(); ++n) g += std::conj(h[n]) * w.w[n];
  return std::log2(1.0 + std::norm(g) / noise_power);
}

SpatialChannel SpatialChannel::resolve(const PathSet& paths, double t_s, double lambda_m,
                                       double f_hz) {
  require(!paths.paths.empty(), ErrorKind::kInvalidArgument, "empty path set");
  require(lambda_m > 0.0, ErrorKind::kInvalidArgument, "wavelength must be positive");
  SpatialChannel sc;
  for (const auto& p : paths.paths) {
    const double phase =
        kTwoPi * (frac_cycles(p.doppler_hz, t_s) + frac_cycles(f_hz, p.delay_s));
    sc.coef.push_back(p.gain * std::polar(1.0, phase));
    sc.ky.push_back(kTwoPi * p.r_tx.y / lambda_m);
    sc.kz.push_back(kTwoPi * p.r_tx.z / lambda_m);
  }
  return sc;
}

cdouble SpatialChannel::at(double y, double z) const {
  cdouble h{0.0, 0.0};
  for (std::size_t p = 0; p < coef.size(); ++p) {
    h += coef[p] * std::polar(1.0, ky[p] * y + kz[p] * z);
  }
  return h;
}

CVector SpatialChannel::evaluate(const MAPlacement& placement) const {
  CVector h(placement.size());
  evaluate(placement.yz(), h);
  return h;
}

void SpatialChannel::evaluate(std::span<const double> yz, std::span<cdouble> out) const {
  const std::size_t n_ant = yz.size() / 2;
  for (std::size_t n = 0; n < n_ant; ++n) out[n] = at(yz[2 * n], yz[2 * n + 1]);
}

}  // namespace mapp
