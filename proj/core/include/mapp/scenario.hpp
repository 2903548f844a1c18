// SPDX-License-Identifier: Apache-2.0
//
// Dynamic secure-downlink scenarios: array geometry, Bob/Eve motion and a
// temporally correlated multipath synthesizer standing in for a full
// 3GPP channel generator.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mapp/channel.hpp"
#include "mapp/config.hpp"

namespace mapp {

inline constexpr double kSpeedOfLight = 299792458.0;

struct ScenarioConfig {
  double f_hz = 2.8e10;
  double bs_height_m = 25.0;
  double vehicle_height_m = 1.5;
  int n_h = 3;
  int n_v = 3;
  double region_side_lambda = 4.0;
  double aperture_side_lambda = 12.0;
  int p_nlos = 5;
  double noise_power_db = 10.0;
  double p_max = 1.0;
  double dt_s = 0.1;
  int snapshots_per_trajectory = 20;
  double speed_kmh_min = 10.0;
  double speed_kmh_max = 100.0;
  int num_bob = 1;
  int num_eve = 1;

  // Synthesizer statistics.
  double los_to_nlos_db = -3.0;
  double path_loss_exponent = 2.2;
  double ref_distance_m = 100.0;
  double min_distance_m = 40.0;
  double max_distance_m = 200.0;
  double sector_half_width_deg = 60.0;
  double ar_rho = 0.9;
  double nlos_azimuth_spread_deg = 15.0;
  double nlos_elevation_spread_deg = 5.0;
  double mean_excess_delay_s = 1e-7;
  /// Relative variance of the additive CSI estimation error fed to the
  /// predictors; 0 means perfect CSI for both roles.
  double csi_error_var = 0.0;

  double lambda_m() const { return kSpeedOfLight / f_hz; }
  double region_side_m() const { return region_side_lambda * lambda_m(); }
  double aperture_side_m() const { return aperture_side_lambda * lambda_m(); }
  int n_antennas() const { return n_h * n_v; }
  double noise_power() const;
  Vec3 bs_position() const { return {0.0, 0.0, bs_height_m}; }

  /// Throws kConfig when an invariant is violated.
  void validate() const;

  static ScenarioConfig from_kv(const KeyValues& kv);
  void to_kv(KeyValues& kv) const;
};

enum class Role { kBob, kEve };

struct UserState {
  Role role = Role::kBob;
  Vec3 position;
  Vec3 velocity;

  friend bool operator==(const UserState&, const UserState&) = default;
};

struct Trajectory {
  std::vector<UserState> bob;
  std::vector<UserState> eve;
};

struct Snapshot {
  double t = 0.0;
  UserState bob;
  UserState eve;
  PathSet bob_paths;
  PathSet eve_paths;
  double noise_power = 1.0;
};

/// One movement region per antenna, row-major over an n_h x n_v grid
/// (horizontal index fastest), centered on the array origin.
std::vector<Region> array_regions(const ScenarioConfig& cfg);

/// Straight-line, constant-speed motion with a random heading per user.
Trajectory generate_trajectory(std::uint64_t seed, const ScenarioConfig& cfg,
                               std::uint64_t trajectory_id = 0);

/// Draws (or, given `prev`, evolves by first-order autoregression) the LoS
/// path and P NLoS paths for one user at one instant. Doppler is always
/// recomputed from the current velocity.
PathSet synthesize_paths(const ScenarioConfig& cfg, const UserState& user, std::uint64_t seed,
                         const PathSet* prev = nullptr);

std::vector<Snapshot> build_snapshot_sequence(std::uint64_t seed, const ScenarioConfig& cfg,
                                              std::uint64_t trajectory_id = 0);

/// Independent stream seed for (seed, a, b, c); SplitMix64-mixed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace mapp
