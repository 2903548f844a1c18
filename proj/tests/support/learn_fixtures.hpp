// SPDX-License-Identifier: Apache-2.0
//
// Small datasets, synthetic statistics and random batches shared by the
// model, training, baseline and evaluation tests.
#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mapp/dataset.hpp"
#include "mapp/learn/batch.hpp"
#include "mapp/learn/model.hpp"
#include "mapp/learn/training.hpp"

namespace mapp::testing {

inline GenerationPlan toy_plan(int trajectories = 20, int snapshots = 8) {
  GenerationPlan p;
  p.n_trajectories = trajectories;
  p.scenario.n_h = 2;
  p.scenario.n_v = 2;
  p.scenario.snapshots_per_trajectory = snapshots;
  p.shape.t_in = 4;
  p.shape.f_out = 2;
  p.pso.swarm_size = 10;
  p.pso.iterations = 10;
  return p;
}

/// 2 x 2 array, T = 4, F = 2; generated once per process.
inline const DatasetSplits& toy_splits() {
  static const DatasetSplits splits = generate_splits(toy_plan(), 7, 1);
  return splits;
}

inline learn::ModelConfig toy_model_config() {
  learn::ModelConfig c;
  c.d_model = 8;
  c.n_enc = 1;
  c.n_dec = 1;
  c.heads = 2;
  c.d_ff = 16;
  c.dropout = 0.0;
  c.t_in = 4;
  c.f_out = 2;
  c.n_t = 4;
  return c;
}

/// Unit-scale statistics for every stream; placement means sit at the
/// region centers of `scenario`.
inline NormStats synthetic_stats(const ScenarioConfig& scenario) {
  NormStats s;
  const int n = scenario.n_antennas();
  const auto regions = array_regions(scenario);
  for (std::size_t k = 0; k < kNumStreams; ++k) {
    const auto w = static_cast<std::size_t>(WindowShape::width(static_cast<Stream>(k), n));
    s.mean[k].assign(w, 0.0);
    s.stddev[k].assign(w, 1.0);
    s.floored[k].assign(w, 0);
  }
  const auto ma = static_cast<std::size_t>(Stream::kMaPos);
  for (std::size_t a = 0; a < regions.size(); ++a) {
    s.mean[ma][3 * a + 1] = 0.5 * (regions[a].y_min + regions[a].y_max);
    s.mean[ma][3 * a + 2] = 0.5 * (regions[a].z_min + regions[a].z_max);
    s.stddev[ma][3 * a + 1] = 0.1 * scenario.region_side_m();
    s.stddev[ma][3 * a + 2] = 0.1 * scenario.region_side_m();
  }
  return s;
}

/// Random normalized inputs shaped for `cfg`; physics tensors are left
/// undefined.
inline learn::Batch random_batch(const learn::ModelConfig& cfg, std::int64_t b,
                                 torch::Dtype dtype = torch::kFloat32) {
  const std::int64_t t = cfg.t_in;
  const std::int64_t n = cfg.n_t;
  const auto o = torch::TensorOptions().dtype(dtype);
  learn::Batch out;
  out.bob_pos = torch::randn({b, t, 3}, o);
  out.eve_pos = torch::randn({b, t, 3}, o);
  out.bob_csi = torch::randn({b, t, 2 * n}, o);
  out.eve_csi = torch::randn({b, t, 2 * n}, o);
  out.ma_pos = torch::randn({b, t, 3 * n}, o);
  out.semantic = torch::randn({b, t, kNumSemantic}, o);
  out.target = torch::randn({b, cfg.f_out, 3 * n}, o);
  out.last_ma = torch::randn({b, 3 * n}, o);
  return out;
}

struct GradientCheck {
  double max_rel_err = 0.0;
  int checked = 0;
  /// Samples whose analytic gradient exceeds the 1e-6 scale floor.
  int informative = 0;
};

/// Autograd against central differences for the composite loss of a
/// float64 toy role-aware model, on `samples` randomly drawn parameter
/// elements. Relative error uses max(|g|, |fd|, 1e-6) as the scale.
inline GradientCheck composite_gradient_check(std::uint64_t seed, int samples) {
  const auto& splits = toy_splits();
  torch::manual_seed(seed);
  learn::RoleAwareModel m(toy_model_config());
  m.to(torch::kFloat64);
  m.set_placement_stats(splits.train.stats);
  m.eval();
  std::vector<std::size_t> idx(std::min<std::size_t>(8, splits.train.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const learn::Batch b = learn::make_batch(splits.train, idx, torch::kFloat64);
  const learn::Geometry g = learn::Geometry::from_scenario(splits.train.scenario, torch::kFloat64);
  const learn::LossWeights w{0.5, 0.7, 1.0};
  auto loss = [&] { return learn::composite_loss(m.forward(b), b, g, w).total; };

  m.zero_grad();
  loss().backward();
  std::vector<torch::Tensor> params = m.parameters();
  std::vector<std::int64_t> offsets{0};
  for (const auto& p : params) offsets.push_back(offsets.back() + p.numel());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(0, offsets.back() - 1);
  GradientCheck out;
  const double h = 1e-6;
  for (int s = 0; s < samples; ++s) {
    const std::int64_t k = pick(rng);
    const auto t = static_cast<std::size_t>(
        std::upper_bound(offsets.begin(), offsets.end(), k) - offsets.begin() - 1);
    const std::int64_t j = k - offsets[t];
    const double analytic = params[t].grad().view(-1)[j].item<double>();
    double lp = 0.0, lm = 0.0;
    {
      torch::NoGradGuard guard;
      auto flat = params[t].view(-1);
      const double v = flat[j].item<double>();
      flat[j] = v + h;
      lp = loss().item<double>();
      flat[j] = v - h;
      lm = loss().item<double>();
      flat[j] = v;
    }
    const double fd = (lp - lm) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-6});
    out.max_rel_err = std::max(out.max_rel_err, std::abs(analytic - fd) / scale);
    ++out.checked;
    if (std::abs(analytic) > 1e-6) ++out.informative;
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("mapp_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace mapp::testing
