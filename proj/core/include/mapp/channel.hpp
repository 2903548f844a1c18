// SPDX-License-Identifier: Apache-2.0
//
// Geometry-based multipath channel kernel: spherical directions, per-antenna
// channel coefficients, MRT beamforming and single-stream capacity. Every
// function here is pure and safe to call concurrently.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mapp {

using cdouble = std::complex<double>;
using CVector = std::vector<cdouble>;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(Vec3 a, Vec3 b);
double norm(Vec3 a);
/// Throws kGeometry on a zero-length input.
Vec3 normalized(Vec3 a);
bool is_finite(Vec3 a);

/// One propagation path. `gain` is the product of the two complex path gains;
/// `delay_s` is the excess delay relative to the LoS path.
struct Path {
  cdouble gain{1.0, 0.0};
  Vec3 r_tx{0.0, 0.0, 1.0};
  Vec3 r_rx{0.0, 0.0, 1.0};
  double doppler_hz = 0.0;
  double delay_s = 0.0;

  friend bool operator==(const Path&, const Path&) = default;
};

struct PathSet {
  std::vector<Path> paths;
  bool is_los_first = true;

  friend bool operator==(const PathSet&, const PathSet&) = default;
};

/// Antenna positions in the array frame, p_n = [0, y_n, z_n], in meters.
class MAPlacement {
 public:
  MAPlacement() = default;
  explicit MAPlacement(std::size_t n_antennas) : yz_(2 * n_antennas, 0.0) {}

  /// Interleaved (y0, z0, y1, z1, ...).
  static MAPlacement from_yz(std::span<const double> yz);
  /// Row-major N x 3 coordinates; the x column must be zero.
  static MAPlacement from_rows(std::span<const double> rows);

  std::size_t size() const { return yz_.size() / 2; }
  double y(std::size_t n) const { return yz_[2 * n]; }
  double z(std::size_t n) const { return yz_[2 * n + 1]; }
  Vec3 position(std::size_t n) const { return {0.0, y(n), z(n)}; }
  void set(std::size_t n, double y, double z) {
    yz_[2 * n] = y;
    yz_[2 * n + 1] = z;
  }

  std::span<const double> yz() const { return yz_; }
  std::span<double> yz() { return yz_; }
  /// Row-major N x 3 with a zero x column.
  std::vector<double> rows() const;

  friend bool operator==(const MAPlacement&, const MAPlacement&) = default;

 private:
  std::vector<double> yz_;
};

/// Axis-aligned movement region of one antenna in the (y, z) plane.
struct Region {
  double y_min = 0.0;
  double y_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;

  double center_y() const { return 0.5 * (y_min + y_max); }
  double center_z() const { return 0.5 * (z_min + z_max); }
  bool contains(double y, double z, double tol = 0.0) const {
    return y >= y_min - tol && y <= y_max + tol && z >= z_min - tol && z <= z_max + tol;
  }
};

double min_pairwise_distance(const MAPlacement& placement);
/// Minimum spacing of at least lambda/2 and every antenna inside its region.
bool is_feasible(const MAPlacement& placement, std::span<const Region> regions,
                 double lambda_m, double tol = 1e-12);
MAPlacement region_centers(std::span<const Region> regions);

struct Beamformer {
  CVector w;
  double p_max = 1.0;
};

/// [sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)], theta from +z,
/// phi from +x.
Vec3 spherical_unit_vector(double theta_rad, double phi_rad);
/// Inverse of spherical_unit_vector for a unit vector: {theta, phi}.
std::pair<double, double> spherical_angles(Vec3 unit);

cdouble channel_coefficient(const PathSet& paths, Vec3 p_n, double t_s, double lambda_m,
                            double f_hz);
CVector channel_vector(const PathSet& paths, const MAPlacement& placement, double t_s,
                       double lambda_m, double f_hz);

/// Maximum ratio transmission toward `h_bob` at full power.
Beamformer mrt_beamformer(std::span<const cdouble> h_bob, double p_max);
/// log2(1 + |h^H w|^2 / noise_power).
double capacity(std::span<const cdouble> h, const Beamformer& w, double noise_power);

/// A PathSet collapsed at one time instant for a planar array in the y-z
/// plane: h_n = sum_p coef_p * exp(j (ky_p y_n + kz_p z_n)). The Doppler and
/// delay phases are folded into `coef`. Equivalent to channel_vector for any
/// placement with a zero x column.
struct SpatialChannel {
  CVector coef;
  std::vector<double> ky;
  std::vector<double> kz;

  static SpatialChannel resolve(const PathSet& paths, double t_s, double lambda_m,
                                double f_hz);

  std::size_t n_paths() const { return coef.size(); }
  cdouble at(double y, double z) const;
  CVector evaluate(const MAPlacement& placement) const;
  void evaluate(std::span<const double> yz, std::span<cdouble> out) const;
};

}  // namespace mapp
