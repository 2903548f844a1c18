// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth placement labels: per-snapshot secrecy-rate maximization over
// the 2*N_t (y, z) antenna coordinates with constrained particle swarm
// optimization. Labels ignore actuation latency and are non-causal.
#pragma once

#include <cstdint>
#include <vector>

#include "mapp/channel.hpp"
#include "mapp/config.hpp"
#include "mapp/scenario.hpp"

namespace mapp {

struct PsoConfig {
  int swarm_size = 50;
  int iterations = 100;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  /// Maximum particle speed per iteration as a fraction of the region side.
  double velocity_clamp = 0.2;
  double penalty_weight = 1e3;
  std::uint64_t seed = 1;
  /// Seed each snapshot's swarm with the previous snapshot's solution.
  bool warm_start = true;

  void validate() const;
  static PsoConfig from_kv(const KeyValues& kv);
  void to_kv(KeyValues& kv) const;
};

/// Everything the fitness needs for one snapshot, resolved once.
struct SecrecyProblem {
  SpatialChannel bob;
  SpatialChannel eve;
  double noise_power = 1.0;
  double p_max = 1.0;
  double lambda_m = 1.0;
  std::vector<Region> regions;

  static SecrecyProblem from_snapshot(const Snapshot& snap, const ScenarioConfig& cfg);

  /// [C_b - C_e]^+ under MRT toward Bob.
  double secrecy(std::span<const double> yz) const;
  double secrecy(const MAPlacement& placement) const { return secrecy(placement.yz()); }
};

struct LabelRecord {
  MAPlacement placement;
  double secrecy_rate = 0.0;
  /// Best-so-far fitness after initialization and after every iteration.
  std::vector<double> fitness_history;
  bool feasible = false;
};

/// Squared spacing shortfall below lambda/2 plus squared region excess, both
/// measured in wavelengths.
double constraint_violation(std::span<const double> yz, std::span<const Region> regions,
                            double lambda_m);

double secrecy_fitness(const MAPlacement& placement, const SecrecyProblem& problem,
                       double penalty_weight);
double secrecy_fitness(const MAPlacement& placement, const Snapshot& snapshot,
                       const ScenarioConfig& cfg, double penalty_weight);

/// Greedy pairwise push-apart until every pair is at least lambda/2 apart,
/// keeping each antenna inside its region.
MAPlacement repair_spacing(MAPlacement placement, std::span<const Region> regions,
                           double lambda_m);

LabelRecord optimize_placement(const SecrecyProblem& problem, const PsoConfig& cfg,
                               const MAPlacement* warm_start = nullptr);

std::vector<LabelRecord> label_trajectory(const std::vector<Snapshot>& snapshots,
                                          const ScenarioConfig& scenario, const PsoConfig& cfg,
                                          std::uint64_t trajectory_id = 0);

}  // namespace mapp
