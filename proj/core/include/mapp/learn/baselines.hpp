// SPDX-License-Identifier: Apache-2.0
//
// Reference predictors: recurrent and convolutional-recurrent sequence
// models, a role-agnostic transformer, persistence, label oracle and an
// online PSO solver that acts on stale channel knowledge.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mapp/learn/model.hpp"
#include "mapp/pso.hpp"

namespace mapp::learn {

enum class BaselineKind { kRNN, kGRU, kLSTM, kCNN_LSTM, kVanillaTransformer, kOnlinePSO, kHoldLast };

std::string to_string(BaselineKind kind);
/// Accepts the names printed by to_string, case-insensitively.
BaselineKind parse_baseline_kind(const std::string& name);

struct RecurrentWidths {
  int rnn = 224;
  int gru = 288;
  int lstm = 224;
  int cnn_channels = 64;
  int cnn_kernel = 3;
  int cnn_lstm = 224;
};

/// Width of the concatenated stream vector for one time step: 6 + 7N.
int joint_input_width(int n_t);

class RecurrentBaseline : public Predictor {
 public:
  RecurrentBaseline(BaselineKind kind, const ModelConfig& cfg, const RecurrentWidths& widths = {});
  torch::Tensor forward(const Batch& batch) override;
  std::int64_t flops() const override;
  std::string kind() const override { return to_string(kind_); }

 private:
  BaselineKind kind_;
  ModelConfig cfg_;
  int hidden_ = 0;
  int in_ = 0;
  torch::nn::Conv1d conv1{nullptr}, conv2{nullptr};
  torch::nn::RNN rnn{nullptr};
  torch::nn::GRU gru{nullptr};
  torch::nn::LSTM lstm{nullptr};
  torch::nn::Linear head{nullptr};
  RecurrentWidths widths_;
};

/// Same backbone as the role-aware model behind one joint linear embedding.
class VanillaTransformer : public Predictor {
 public:
  explicit VanillaTransformer(const ModelConfig& cfg);
  torch::Tensor forward(const Batch& batch) override;
  std::int64_t flops() const override;
  std::string kind() const override { return "VanillaTransformer"; }

  torch::nn::Linear embed{nullptr};
  Backbone backbone{nullptr};

 private:
  ModelConfig cfg_;
};

/// Repeats the last observed placement for every future step.
class HoldLast : public Predictor {
 public:
  explicit HoldLast(const ModelConfig& cfg);
  torch::Tensor forward(const Batch& batch) override;
  std::int64_t flops() const override { return 0; }
  std::string kind() const override { return "HoldLast"; }

 private:
  int f_out_;
};

/// Emits the stored labels; the upper anchor for evaluation.
class Oracle : public Predictor {
 public:
  Oracle();
  torch::Tensor forward(const Batch& batch) override { return batch.target; }
  std::int64_t flops() const override { return 0; }
  std::string kind() const override { return "Oracle"; }
};

/// Constructs any torch-backed kind; OnlinePSO is not a module and throws
/// kInvalidArgument here.
PredictorPtr make_baseline(BaselineKind kind, const ModelConfig& cfg,
                           const RecurrentWidths& widths = {});

/// Builds a predictor by name: "RoleAware" or any baseline name.
PredictorPtr make_predictor(const std::string& kind, const ModelConfig& cfg);

/// Solves the secrecy placement problem on window step T - 1 - latency_steps
/// and holds that placement for all F future steps. Returns F x 3N meters.
std::vector<double> online_pso_predict(const Dataset& ds, std::size_t window,
                                       const PsoConfig& cfg, int latency_steps);

}  // namespace mapp::learn
