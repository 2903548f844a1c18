// SPDX-License-Identifier: Apache-2.0
#include "mapp/pso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mapp/error.hpp"

namespace mapp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

Bounds search_bounds(std::span<const Region> regions) {
  Bounds b;
  for (const auto& r : regions) {
    b.lo.push_back(r.y_min);
    b.lo.push_back(r.z_min);
    b.hi.push_back(r.y_max);
    b.hi.push_back(r.z_max);
  }
  return b;
}

void clamp_to(std::span<double> x, const Bounds& b) {
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = std::clamp(x[d], b.lo[d], b.hi[d]);
}

}  // namespace

void PsoConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kConfig, what);
  };
  check(swarm_size > 0, "pso_swarm_size must be positive");
  check(iterations > 0, "pso_iterations must be positive");
  check(inertia > 0.0 && inertia < 1.0, "pso_inertia must lie in (0, 1)");
  check(cognitive > 0.0 && social > 0.0, "pso acceleration constants must be positive");
  check(velocity_clamp > 0.0, "pso_velocity_clamp must be positive");
  check(penalty_weight >= 0.0, "pso_penalty_weight must be non-negative");
}

PsoConfig PsoConfig::from_kv(const KeyValues& kv) {
  PsoConfig c;
  c.swarm_size = static_cast<int>(kv.get_int("pso_swarm_size", c.swarm_size));
  c.iterations = static_cast<int>(kv.get_int("pso_iterations", c.iterations));
  c.inertia = kv.get_double("pso_inertia", c.inertia);
  c.cognitive = kv.get_double("pso_cognitive", c.cognitive);
  c.social = kv.get_double("pso_social", c.social);
  c.velocity_clamp = kv.get_double("pso_velocity_clamp", c.velocity_clamp);
  c.penalty_weight = kv.get_double("pso_penalty_weight", c.penalty_weight);
  c.seed = static_cast<std::uint64_t>(kv.get_int("pso_seed", static_cast<std::int64_t>(c.seed)));
  c.warm_start = kv.get_bool("pso_warm_start", c.warm_start);
  c.validate();
  return c;
}

void PsoConfig::to_kv(KeyValues& kv) const {
  kv.set("pso_swarm_size", swarm_size);
  kv.set("pso_iterations", iterations);
  kv.set("pso_inertia", inertia);
  kv.set("pso_cognitive", cognitive);
  kv.set("pso_social", social);
  kv.set("pso_velocity_clamp", velocity_clamp);
  kv.set("pso_penalty_weight", penalty_weight);
  kv.set("pso_seed", static_cast<std::int64_t>(seed));
  kv.set("pso_warm_start", warm_start);
}

SecrecyProblem SecrecyProblem::from_snapshot(const Snapshot& snap, const ScenarioConfig& cfg) {
  SecrecyProblem p;
  p.bob = SpatialChannel::resolve(snap.bob_paths, snap.t, cfg.lambda_m(), cfg.f_hz);
  p.eve = SpatialChannel::resolve(snap.eve_paths, snap.t, cfg.lambda_m(), cfg.f_hz);
  p.noise_power = snap.noise_power;
  p.p_max = cfg.p_max;
  p.lambda_m = cfg.lambda_m();
  p.regions = array_regions(cfg);
  return p;
}

double SecrecyProblem::secrecy(std::span<const double> yz) const {
  // |h_e^H w|^2 with w = sqrt(p) h_b / |h_b| equals p |h_e^H h_b|^2 / |h_b|^2.
  double bob_energy = 0.0;
  cdouble cross{0.0, 0.0};
  const std::size_t n_ant = yz.size() / 2;
  for (std::size_t n = 0; n < n_ant; ++n) {
    const cdouble hb = bob.at(yz[2 * n], yz[2 * n + 1]);
    const cdouble he = eve.at(yz[2 * n], yz[2 * n + 1]);
    bob_energy += std::norm(hb);
    cross += std::conj(he) * hb;
  }
  if (!std::isfinite(bob_energy) || !std::isfinite(std::norm(cross))) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (bob_energy == 0.0) return 0.0;
  const double cb = std::log2(1.0 + p_max * bob_energy / noise_power);
  const double ce = std::log2(1.0 + p_max * std::norm(cross) / (bob_energy * noise_power));
  return std::max(cb - ce, 0.0);
}

double constraint_violation(std::span<const double> yz, std::span<const Region> regions,
                            double lambda_m) {
  const std::size_t n_ant = yz.size() / 2;
  double v = 0.0;
  const double half = 0.5 * lambda_m;
  for (std::size_t a = 0; a < n_ant; ++a) {
    for (std::size_t b = a + 1; b < n_ant; ++b) {
      const double d = std::hypot(yz[2 * a] - yz[2 * b], yz[2 * a + 1] - yz[2 * b + 1]);
      if (d < half) {
        const double s = (half - d) / lambda_m;
        v += s * s;
      }
    }
  }
  for (std::size_t n = 0; n < n_ant && n < regions.size(); ++n) {
    const auto& r = regions[n];
    const double ey = std::max({r.y_min - yz[2 * n], yz[2 * n] - r.y_max, 0.0}) / lambda_m;
    const double ez = std::max({r.z_min - yz[2 * n + 1], yz[2 * n + 1] - r.z_max, 0.0}) / lambda_m;
    v += ey * ey + ez * ez;
  }
  return v;
}

double secrecy_fitness(const MAPlacement& placement, const SecrecyProblem& problem,
                       double penalty_weight) {
  return problem.secrecy(placement) -
         penalty_weight * constraint_violation(placement.yz(), problem.regions, problem.lambda_m);
}

double secrecy_fitness(const MAPlacement& placement, const Snapshot& snapshot,
                       const ScenarioConfig& cfg, double penalty_weight) {
  return secrecy_fitness(placement, SecrecyProblem::from_snapshot(snapshot, cfg), penalty_weight);
}

MAPlacement repair_spacing(MAPlacement placement, std::span<const Region> regions,
                           double lambda_m) {
  const double target = 0.5 * lambda_m * (1.0 + 1e-9);
  const std::size_t n_ant = placement.size();
  auto clamp_one = [&](std::size_t n) {
    const auto& r = regions[n];
    placement.set(n, std::clamp(placement.y(n), r.y_min, r.y_max),
                  std::clamp(placement.z(n), r.z_min, r.z_max));
  };
  for (std::size_t n = 0; n < n_ant; ++n) clamp_one(n);

  for (int sweep = 0; sweep < 200; ++sweep) {
    bool moved = false;
    for (std::size_t a = 0; a < n_ant; ++a) {
      for (std::size_t b = a + 1; b < n_ant; ++b) {
        double dy = placement.y(b) - placement.y(a);
        double dz = placement.z(b) - placement.z(a);
        double d = std::hypot(dy, dz);
        if (d >= target) continue;
        if (d == 0.0) {
          // Separate along the line joining the two region centers.
          dy = regions[b].center_y() - regions[a].center_y();
          dz = regions[b].center_z() - regions[a].center_z();
          const double c = std::hypot(dy, dz);
          dy = c > 0.0 ? dy / c : 1.0;
          dz = c > 0.0 ? dz / c : 0.0;
        } else {
          dy /= d;
          dz /= d;
        }
        const double half_step = 0.5 * (target - d);
        placement.set(a, placement.y(a) - half_step * dy, placement.z(a) - half_step * dz);
        placement.set(b, placement.y(b) + half_step * dy, placement.z(b) + half_step * dz);
        clamp_one(a);
        clamp_one(b);
        moved = true;
      }
    }
    if (!moved) break;
  }
  if (min_pairwise_distance(placement) >= 0.5 * lambda_m) return placement;

  // Clamping blocked the push; pull violators toward their region centers.
  for (int round = 0; round < 64; ++round) {
    bool any = false;
    for (std::size_t a = 0; a < n_ant; ++a) {
      for (std::size_t b = a + 1; b < n_ant; ++b) {
        const double d = std::hypot(placement.y(a) - placement.y(b), placement.z(a) - placement.z(b));
        if (d >= 0.5 * lambda_m) continue;
        any = true;
        for (std::size_t n : {a, b}) {
          placement.set(n, 0.5 * (placement.y(n) + regions[n].center_y()),
                        0.5 * (placement.z(n) + regions[n].center_z()));
        }
      }
    }
    if (!any) break;
  }
  return placement;
}

LabelRecord optimize_placement(const SecrecyProblem& problem, const PsoConfig& cfg,
                               const MAPlacement* warm_start) {
  cfg.validate();
  const std::size_t n_ant = problem.regions.size();
  require(n_ant > 0, ErrorKind::kInvalidArgument, "problem has no antenna regions");
  const std::size_t dims = 2 * n_ant;
  const Bounds bounds = search_bounds(problem.regions);
  const std::size_t swarm = static_cast<std::size_t>(cfg.swarm_size);

  std::vector<double> vmax(dims);
  for (std::size_t d = 0; d < dims; ++d) vmax[d] = cfg.velocity_clamp * (bounds.hi[d] - bounds.lo[d]);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> x(swarm * dims), v(swarm * dims), pbest(swarm * dims);
  std::vector<double> pbest_fit(swarm, kNegInf);
  std::vector<double> gbest(dims);
  double gbest_fit = kNegInf;
  std::vector<double> feasible_best;
  double feasible_best_fit = kNegInf;

  auto fitness = [&](std::span<const double> pos) {
    const double viol = constraint_violation(pos, problem.regions, problem.lambda_m);
    const double sec = problem.secrecy(pos);
    return std::pair{sec - cfg.penalty_weight * viol, viol};
  };

  auto consider = [&](std::size_t i) {
    std::span<const double> pos(&x[i * dims], dims);
    const auto [f, viol] = fitness(pos);
    if (std::isnan(f)) return;
    if (f > pbest_fit[i]) {
      pbest_fit[i] = f;
      std::copy(pos.begin(), pos.end(), pbest.begin() + static_cast<std::ptrdiff_t>(i * dims));
    }
    if (f > gbest_fit) {
      gbest_fit = f;
      std::copy(pos.begin(), pos.end(), gbest.begin());
    }
    if (viol == 0.0 && f > feasible_best_fit) {
      feasible_best_fit = f;
      feasible_best.assign(pos.begin(), pos.end());
    }
  };

  for (std::size_t i = 0; i < swarm; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      x[i * dims + d] = bounds.lo[d] + unit(rng) * (bounds.hi[d] - bounds.lo[d]);
      v[i * dims + d] = (2.0 * unit(rng) - 1.0) * vmax[d];
    }
  }
  if (warm_start && warm_start->size() == n_ant) {
    std::copy(warm_start->yz().begin(), warm_start->yz().end(), x.begin());
    clamp_to(std::span<double>(x.data(), dims), bounds);
  }
  for (std::size_t i = 0; i < swarm; ++i) consider(i);

  LabelRecord rec;
  rec.fitness_history.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  rec.fitness_history.push_back(gbest_fit);

  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < swarm; ++i) {
      for (std::size_t d = 0; d < dims; ++d) {
        const std::size_t k = i * dims + d;
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double vel = cfg.inertia * v[k] + cfg.cognitive * r1 * (pbest[k] - x[k]) +
                     cfg.social * r2 * (gbest[d] - x[k]);
        vel = std::clamp(vel, -vmax[d], vmax[d]);
        v[k] = vel;
        x[k] = std::clamp(x[k] + vel, bounds.lo[d], bounds.hi[d]);
      }
    }
    // Evaluation happens after every particle moved: the swarm update is a
    // barrier per iteration.
    for (std::size_t i = 0; i < swarm; ++i) consider(i);
    rec.fitness_history.push_back(gbest_fit);
  }

  if (!std::isfinite(gbest_fit)) fail(ErrorKind::kNumerical, "PSO swarm produced no finite fitness");

  MAPlacement best = MAPlacement::from_yz(gbest);
  if (!is_feasible(best, problem.regions, problem.lambda_m)) {
    best = repair_spacing(best, problem.regions, problem.lambda_m);
    if (!is_feasible(best, problem.regions, problem.lambda_m)) {
      best = feasible_best.empty() ? region_centers(problem.regions)
                                   : MAPlacement::from_yz(feasible_best);
    }
  }
  rec.placement = best;
  rec.secrecy_rate = problem.secrecy(best);
  rec.feasible = is_feasible(best, problem.regions, problem.lambda_m);
  return rec;
}

std::vector<LabelRecord> label_trajectory(const std::vector<Snapshot>& snapshots,
                                          const ScenarioConfig& scenario, const PsoConfig& cfg,
                                          std::uint64_t trajectory_id) {
  require(!snapshots.empty(), ErrorKind::kInvalidArgument, "no snapshots to label");
  std::vector<LabelRecord> out;
  out.reserve(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    PsoConfig local = cfg;
    local.seed = stream_seed(cfg.seed, trajectory_id, 0x50534f, i);
    const auto problem = SecrecyProblem::from_snapshot(snapshots[i], scenario);
    const MAPlacement* warm = (cfg.warm_start && !out.empty()) ? &out.back().placement : nullptr;
    out.push_back(optimize_placement(problem, local, warm));
  }
  return out;
}

}  // namespace mapp
