// SPDX-License-Identifier: Apache-2.0
//
// Composite objective alpha * L_nmse + beta * L_secrecy + gamma * L_constraint,
// its two-phase weight schedule, warmup-cosine learning rate and the fit loop.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mapp/learn/batch.hpp"
#include "mapp/learn/model.hpp"

namespace mapp::learn {

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class LossMode { kComposite, kNmseOnly };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 256;
  double max_lr = 1e-4;
  int warmup_epochs = 10;
  std::uint64_t seed = 1;
  double grad_clip = 1.0;
  LossMode loss_mode = LossMode::kComposite;

  // Weight schedule: constant `start` through epoch `loss_warmup_end`, linear
  // to `end` at epoch `loss_ramp_end`, constant afterwards.
  int loss_warmup_end = 10;
  int loss_ramp_end = 60;
  LossWeights start{1.0, 0.1, 1.0};
  LossWeights end{0.3, 1.0, 1.0};

  /// Runs the model and losses in float64 (used by gradient checks).
  bool double_precision = false;
  int threads = 1;

  void validate() const;
  static TrainConfig from_kv(const KeyValues& kv);
  void to_kv(KeyValues& kv) const;
  /// Keys shared by every predictor trained in one comparison: optimizer,
  /// schedules, batch size, epochs and seed, without the loss weights.
  KeyValues harness_kv() const;
};

LossWeights schedule_weights(int epoch, const TrainConfig& cfg);
double schedule_lr(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg);

/// Batch mean of ||target - pred||^2 / ||target||^2 over [B, F, 3N].
torch::Tensor loss_nmse(const torch::Tensor& pred, const torch::Tensor& target);
/// [B, F] capacity gap C_b - C_e under MRT at `pred` for the batch's future
/// channels.
torch::Tensor secrecy_gap(const torch::Tensor& pred, const Batch& batch, double p_max);
/// -mean(C_b - C_e), unclamped.
torch::Tensor loss_secrecy(const torch::Tensor& pred, const Batch& batch, double p_max);
/// Squared spacing shortfall below lambda/2 plus squared region excess in
/// meters, summed per placement and averaged over the B x F placements.
torch::Tensor loss_constraints(const torch::Tensor& pred, const Geometry& geometry);

struct LossTerms {
  torch::Tensor total, nmse, secrecy, constraint;
};
LossTerms composite_loss(const torch::Tensor& pred, const Batch& batch, const Geometry& geometry,
                         const LossWeights& w);

struct StepLog {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  LossWeights weights;
  double total = 0.0, nmse = 0.0, secrecy = 0.0, constraint = 0.0;
};

struct EpochLog {
  int epoch = 0;
  LossWeights weights;
  double total = 0.0, nmse = 0.0, secrecy = 0.0, constraint = 0.0;
  double valid_asr = 0.0, valid_spsc = 0.0, valid_nmse = 0.0;
  double valid_objective = 0.0;
};

struct FitResult {
  std::vector<EpochLog> curves;
  std::vector<StepLog> steps;
  int best_epoch = 0;
  double best_objective = 0.0;
  std::uint64_t harness_hash = 0;
};

/// Adam with global-norm clipping. The state with the lowest validation
/// objective (final-phase weights, or NMSE alone in NMSE-only mode) is
/// restored before returning.
FitResult fit(Predictor& model, const Dataset& train, const Dataset& valid, const TrainConfig& cfg,
              const std::function<void(const EpochLog&)>& on_epoch = {});

std::string curves_csv(const FitResult& r);
std::string steps_csv(const FitResult& r);

}  // namespace mapp::learn
