// SPDX-License-Identifier: Apache-2.0
//
// Dataset windows to tensors: normalized input streams, scaled semantic
// features, targets and the future-step channel data consumed by the
// secrecy loss.
#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <vector>

#include "mapp/dataset.hpp"

namespace mapp::learn {

struct Batch {
  // [B, T, width] z-scored streams.
  torch::Tensor bob_pos, eve_pos, bob_csi, eve_csi, ma_pos;
  // [B, T, kNumSemantic] after fixed scaling.
  torch::Tensor semantic;
  // [B, F, 3N] placements in meters and [B, 3N] last observed placement.
  torch::Tensor target;
  torch::Tensor last_ma;
  // Future channels, [B, F, P] each, and [B, F] noise power.
  torch::Tensor bob_coef_re, bob_coef_im, bob_ky, bob_kz;
  torch::Tensor eve_coef_re, eve_coef_im, eve_ky, eve_kz;
  torch::Tensor noise;

  std::int64_t size() const { return target.size(0); }
};

/// Region bounds and wavelength for the constraint loss.
struct Geometry {
  torch::Tensor y_min, y_max, z_min, z_max;  // [N]
  double lambda_m = 0.0;
  double p_max = 1.0;

  static Geometry from_scenario(const ScenarioConfig& cfg, torch::Dtype dtype);
};

/// Divisors applied to raw semantic features before the MLP.
std::vector<double> semantic_scales();

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices, torch::Dtype dtype);
Batch make_batch(const Dataset& ds, torch::Dtype dtype);
/// Rows `index` (int64 tensor) of every field.
Batch select(const Batch& b, const torch::Tensor& index);

/// Per-feature (mean, std) of the yz placement coordinates, [2N] each.
std::pair<torch::Tensor, torch::Tensor> placement_stats(const NormStats& stats, torch::Dtype dtype);

}  // namespace mapp::learn
