// SPDX-License-Identifier: Apache-2.0
#include "mapp/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mapp/error.hpp"

namespace mapp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// Keeps an elevation inside [0, pi] by reflecting through the poles.
std::pair<double, double> fold_elevation(double theta, double phi) {
  if (theta < 0.0) return {-theta, wrap_angle(phi + kPi)};
  if (theta > kPi) return {2.0 * kPi - theta, wrap_angle(phi + kPi)};
  return {theta, phi};
}

cdouble complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

UserState draw_user(std::mt19937_64& rng, const ScenarioConfig& cfg, Role role) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r2_min = cfg.min_distance_m * cfg.min_distance_m;
  const double r2_max = cfg.max_distance_m * cfg.max_distance_m;
  // Uniform over the annular sector area.
  const double r = std::sqrt(r2_min + unit(rng) * (r2_max - r2_min));
  const double az = (2.0 * unit(rng) - 1.0) * cfg.sector_half_width_deg * kDeg;
  const double speed_kmh = cfg.speed_kmh_min + unit(rng) * (cfg.speed_kmh_max - cfg.speed_kmh_min);
  const double heading = 2.0 * kPi * unit(rng);
  const double v = speed_kmh / 3.6;
  UserState s;
  s.role = role;
  s.position = {r * std::cos(az), r * std::sin(az), cfg.vehicle_height_m};
  s.velocity = {v * std::cos(heading), v * std::sin(heading), 0.0};
  return s;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

double ScenarioConfig::noise_power() const { return std::pow(10.0, noise_power_db / 10.0); }

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kConfig, what);
  };
  check(f_hz > 0.0 && std::isfinite(f_hz), "f_hz must be positive");
  check(n_h >= 1 && n_v >= 1, "array grid must be at least 1 x 1");
  check(region_side_lambda > 0.0, "region_side_lambda must be positive");
  check(aperture_side_lambda + 1e-12 >= n_h * region_side_lambda &&
            aperture_side_lambda + 1e-12 >= n_v * region_side_lambda,
        "array regions do not fit inside the aperture");
  check(p_nlos >= 0, "p_nlos must be non-negative");
  check(p_max > 0.0, "p_max must be positive");
  check(dt_s > 0.0, "dt_s must be positive");
  check(snapshots_per_trajectory >= 1, "snapshots_per_trajectory must be positive");
  check(speed_kmh_min > 0.0 && speed_kmh_max >= speed_kmh_min, "speeds must be positive");
  check(num_bob == 1 && num_eve == 1, "exactly one Bob and one Eve are supported");
  check(bs_height_m != vehicle_height_m || min_distance_m > 0.0, "users may coincide with the BS");
  check(min_distance_m > 0.0 && max_distance_m >= min_distance_m, "invalid distance range");
  check(ar_rho >= 0.0 && ar_rho <= 1.0, "ar_rho must lie in [0, 1]");
  check(mean_excess_delay_s >= 0.0, "mean_excess_delay_s must be non-negative");
  check(csi_error_var >= 0.0, "csi_error_var must be non-negative");
}

ScenarioConfig ScenarioConfig::from_kv(const KeyValues& kv) {
  ScenarioConfig c;
  c.f_hz = kv.get_double("f_hz", c.f_hz);
  c.bs_height_m = kv.get_double("bs_height_m", c.bs_height_m);
  c.vehicle_height_m = kv.get_double("vehicle_height_m", c.vehicle_height_m);
  c.n_h = static_cast<int>(kv.get_int("n_h", c.n_h));
  c.n_v = static_cast<int>(kv.get_int("n_v", c.n_v));
  c.region_side_lambda = kv.get_double("region_side_lambda", c.region_side_lambda);
  c.aperture_side_lambda = kv.get_double("aperture_side_lambda", c.aperture_side_lambda);
  c.p_nlos = static_cast<int>(kv.get_int("p_nlos", c.p_nlos));
  c.noise_power_db = kv.get_double("noise_power_db", c.noise_power_db);
  c.p_max = kv.get_double("p_max", c.p_max);
  c.dt_s = kv.get_double("dt_s", c.dt_s);
  c.snapshots_per_trajectory =
      static_cast<int>(kv.get_int("snapshots_per_trajectory", c.snapshots_per_trajectory));
  auto speeds = kv.get_doubles("speed_kmh_range", {c.speed_kmh_min, c.speed_kmh_max});
  if (speeds.size() != 2) fail(ErrorKind::kConfig, "speed_kmh_range needs two values");
  c.speed_kmh_min = speeds[0];
  c.speed_kmh_max = speeds[1];
  c.num_bob = static_cast<int>(kv.get_int("num_bob", c.num_bob));
  c.num_eve = static_cast<int>(kv.get_int("num_eve", c.num_eve));
  c.los_to_nlos_db = kv.get_double("los_to_nlos_db", c.los_to_nlos_db);
  c.path_loss_exponent = kv.get_double("path_loss_exponent", c.path_loss_exponent);
  c.ref_distance_m = kv.get_double("ref_distance_m", c.ref_distance_m);
  c.min_distance_m = kv.get_double("min_distance_m", c.min_distance_m);
  c.max_distance_m = kv.get_double("max_distance_m", c.max_distance_m);
  c.sector_half_width_deg = kv.get_double("sector_half_width_deg", c.sector_half_width_deg);
  c.ar_rho = kv.get_double("ar_rho", c.ar_rho);
  c.nlos_azimuth_spread_deg = kv.get_double("nlos_azimuth_spread_deg", c.nlos_azimuth_spread_deg);
  c.nlos_elevation_spread_deg =
      kv.get_double("nlos_elevation_spread_deg", c.nlos_elevation_spread_deg);
  c.mean_excess_delay_s = kv.get_double("mean_excess_delay_s", c.mean_excess_delay_s);
  c.csi_error_var = kv.get_double("csi_error_var", c.csi_error_var);
  c.validate();
  return c;
}

void ScenarioConfig::to_kv(KeyValues& kv) const {
  kv.set("f_hz", f_hz);
  kv.set("bs_height_m", bs_height_m);
  kv.set("vehicle_height_m", vehicle_height_m);
  kv.set("n_h", n_h);
  kv.set("n_v", n_v);
  kv.set("region_side_lambda", region_side_lambda);
  kv.set("aperture_side_lambda", aperture_side_lambda);
  kv.set("p_nlos", p_nlos);
  kv.set("noise_power_db", noise_power_db);
  kv.set("p_max", p_max);
  kv.set("dt_s", dt_s);
  kv.set("snapshots_per_trajectory", snapshots_per_trajectory);
  kv.set("speed_kmh_range", format_double(speed_kmh_min) + ", " + format_double(speed_kmh_max));
  kv.set("num_bob", num_bob);
  kv.set("num_eve", num_eve);
  kv.set("los_to_nlos_db", los_to_nlos_db);
  kv.set("path_loss_exponent", path_loss_exponent);
  kv.set("ref_distance_m", ref_distance_m);
  kv.set("min_distance_m", min_distance_m);
  kv.set("max_distance_m", max_distance_m);
  kv.set("sector_half_width_deg", sector_half_width_deg);
  kv.set("ar_rho", ar_rho);
  kv.set("nlos_azimuth_spread_deg", nlos_azimuth_spread_deg);
  kv.set("nlos_elevation_spread_deg", nlos_elevation_spread_deg);
  kv.set("mean_excess_delay_s", mean_excess_delay_s);
  kv.set("csi_error_var", csi_error_var);
}

std::vector<Region> array_regions(const ScenarioConfig& cfg) {
  cfg.validate();
  const double side = cfg.region_side_m();
  std::vector<Region> regions;
  regions.reserve(static_cast<std::size_t>(cfg.n_antennas()));
  for (int iv = 0; iv < cfg.n_v; ++iv) {
    for (int ih = 0; ih < cfg.n_h; ++ih) {
      const double cy = (ih - 0.5 * (cfg.n_h - 1)) * side;
      const double cz = (iv - 0.5 * (cfg.n_v - 1)) * side;
      regions.push_back({cy - 0.5 * side, cy + 0.5 * side, cz - 0.5 * side, cz + 0.5 * side});
    }
  }
  return regions;
}

Trajectory generate_trajectory(std::uint64_t seed, const ScenarioConfig& cfg,
                               std::uint64_t trajectory_id) {
  cfg.validate();
  std::mt19937_64 rng(stream_seed(seed, trajectory_id, 0x7261));
  const UserState bob0 = draw_user(rng, cfg, Role::kBob);
  const UserState eve0 = draw_user(rng, cfg, Role::kEve);
  Trajectory traj;
  const auto n = static_cast<std::size_t>(cfg.snapshots_per_trajectory);
  traj.bob.reserve(n);
  traj.eve.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * cfg.dt_s;
    UserState b = bob0;
    b.position = bob0.position + t * bob0.velocity;
    UserState e = eve0;
    e.position = eve0.position + t * eve0.velocity;
    traj.bob.push_back(b);
    traj.eve.push_back(e);
  }
  return traj;
}

PathSet synthesize_paths(const ScenarioConfig& cfg, const UserState& user, std::uint64_t seed,
                         const PathSet* prev) {
  const double lambda = cfg.lambda_m();
  const Vec3 offset = user.position - cfg.bs_position();
  const double d = norm(offset);
  require(d > 1e-6, ErrorKind::kGeometry, "user located at the BS");
  const Vec3 r_los = (1.0 / d) * offset;
  const auto [theta0, phi0] = spherical_angles(r_los);

  const double los_power = std::pow(cfg.ref_distance_m / d, cfg.path_loss_exponent);
  const double nlos_ratio = std::pow(10.0, -cfg.los_to_nlos_db / 10.0);
  const double per_path_power =
      cfg.p_nlos > 0 ? los_power * nlos_ratio / static_cast<double>(cfg.p_nlos) : 0.0;

  if (prev) {
    require(prev->paths.size() == static_cast<std::size_t>(cfg.p_nlos) + 1,
            ErrorKind::kInvalidArgument, "previous path set has a different path count");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(
      cfg.mean_excess_delay_s > 0.0 ? 1.0 / cfg.mean_excess_delay_s : 1.0);

  const double rho = cfg.ar_rho;
  const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double az_sd = cfg.nlos_azimuth_spread_deg * kDeg;
  const double el_sd = cfg.nlos_elevation_spread_deg * kDeg;

  PathSet out;
  out.is_los_first = true;
  out.paths.reserve(static_cast<std::size_t>(cfg.p_nlos) + 1);

  Path los;
  const double los_phase = prev ? std::arg(prev->paths[0].gain) : 2.0 * kPi * unit(rng) - kPi;
  los.gain = std::polar(std::sqrt(los_power), los_phase);
  los.r_tx = r_los;
  los.r_rx = -1.0 * r_los;
  los.doppler_hz = dot(r_los, user.velocity) / lambda;
  los.delay_s = 0.0;
  out.paths.push_back(los);

  double prev_theta0 = 0.0;
  double prev_phi0 = 0.0;
  double prev_per_path = 0.0;
  if (prev) {
    std::tie(prev_theta0, prev_phi0) = spherical_angles(prev->paths[0].r_tx);
    prev_per_path = std::norm(prev->paths[0].gain) * nlos_ratio / static_cast<double>(cfg.p_nlos);
  }

  for (int p = 1; p <= cfg.p_nlos; ++p) {
    cdouble g_unit;
    double d_theta, d_phi, theta_rx, phi_rx, delay;
    const cdouble fresh = complex_normal(rng);
    const double n_theta = gauss(rng) * el_sd;
    const double n_phi = gauss(rng) * az_sd;
    const double n_theta_rx = gauss(rng) * el_sd;
    const double n_phi_rx = 2.0 * kPi * unit(rng) - kPi;
    const double fresh_delay = cfg.mean_excess_delay_s > 0.0 ? expo(rng) : 0.0;
    if (prev) {
      const Path& q = prev->paths[static_cast<std::size_t>(p)];
      const auto [pt, pp] = spherical_angles(q.r_tx);
      const auto [pt_rx, pp_rx] = spherical_angles(q.r_rx);
      const cdouble g_prev = prev_per_path > 0.0 ? q.gain / std::sqrt(prev_per_path) : cdouble{};
      g_unit = rho * g_prev + innov * fresh;
      d_theta = rho * (pt - prev_theta0) + innov * n_theta;
      d_phi = rho * wrap_angle(pp - prev_phi0) + innov * n_phi;
      theta_rx = 0.5 * kPi + rho * (pt_rx - 0.5 * kPi) + innov * n_theta_rx;
      phi_rx = wrap_angle(pp_rx + innov * n_phi);
      delay = rho * q.delay_s + (1.0 - rho) * fresh_delay;
    } else {
      g_unit = fresh;
      d_theta = n_theta;
      d_phi = n_phi;
      theta_rx = 0.5 * kPi + n_theta_rx;
      phi_rx = n_phi_rx;
      delay = fresh_delay;
    }
    const auto [theta, phi] = fold_elevation(theta0 + d_theta, wrap_angle(phi0 + d_phi));
    const auto [th_rx, ph_rx] = fold_elevation(theta_rx, phi_rx);
    Path path;
    path.gain = std::sqrt(per_path_power) * g_unit;
    path.r_tx = spherical_unit_vector(theta, phi);
    path.r_rx = spherical_unit_vector(th_rx, ph_rx);
    path.doppler_hz = dot(path.r_tx, user.velocity) / lambda;
    path.delay_s = delay;
    out.paths.push_back(path);
  }
  return out;
}

std::vector<Snapshot> build_snapshot_sequence(std::uint64_t seed, const ScenarioConfig& cfg,
                                              std::uint64_t trajectory_id) {
  const Trajectory traj = generate_trajectory(seed, cfg, trajectory_id);
  std::vector<Snapshot> out;
  out.reserve(traj.bob.size());
  const double noise = cfg.noise_power();
  for (std::size_t i = 0; i < traj.bob.size(); ++i) {
    Snapshot s;
    s.t = static_cast<double>(i) * cfg.dt_s;
    s.bob = traj.bob[i];
    s.eve = traj.eve[i];
    const PathSet* prev_b = i > 0 ? &out.back().bob_paths : nullptr;
    const PathSet* prev_e = i > 0 ? &out.back().eve_paths : nullptr;
    s.bob_paths = synthesize_paths(cfg, s.bob, stream_seed(seed, trajectory_id, 1, i), prev_b);
    s.eve_paths = synthesize_paths(cfg, s.eve, stream_seed(seed, trajectory_id, 2, i), prev_e);
    s.noise_power = noise;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mapp
