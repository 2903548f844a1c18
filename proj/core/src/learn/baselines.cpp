// SPDX-License-Identifier: Apache-2.0
#include "mapp/learn/baselines.hpp"

#include <algorithm>
#include <cctype>

#include "mapp/error.hpp"

namespace mapp::learn {

namespace nn = torch::nn;

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kRNN: return "RNN";
    case BaselineKind::kGRU: return "GRU";
    case BaselineKind::kLSTM: return "LSTM";
    case BaselineKind::kCNN_LSTM: return "CNN_LSTM";
    case BaselineKind::kVanillaTransformer: return "VanillaTransformer";
    case BaselineKind::kOnlinePSO: return "OnlinePSO";
    case BaselineKind::kHoldLast: return "HoldLast";
  }
  fail(ErrorKind::kInvalidArgument, "unknown baseline kind");
}

BaselineKind parse_baseline_kind(const std::string& name) {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  const std::string n = lower(name);
  for (auto k : {BaselineKind::kRNN, BaselineKind::kGRU, BaselineKind::kLSTM, BaselineKind::kCNN_LSTM,
                 BaselineKind::kVanillaTransformer, BaselineKind::kOnlinePSO, BaselineKind::kHoldLast}) {
    if (lower(to_string(k)) == n) return k;
  }
  fail(ErrorKind::kInvalidArgument, "unknown baseline kind '" + name + "'");
}

int joint_input_width(int n_t) { return 3 + 3 + 2 * n_t + 2 * n_t + 3 * n_t; }

namespace {

torch::Tensor joint_inputs(const Batch& b) {
  return torch::cat({b.bob_pos, b.eve_pos, b.bob_csi, b.eve_csi, b.ma_pos}, 2);
}

}  // namespace

RecurrentBaseline::RecurrentBaseline(BaselineKind kind, const ModelConfig& cfg,
                                     const RecurrentWidths& widths)
    : kind_(kind), cfg_(cfg), widths_(widths) {
  cfg_.validate();
  in_ = joint_input_width(cfg_.n_t);
  int seq_in = in_;
  switch (kind_) {
    case BaselineKind::kRNN:
      hidden_ = widths.rnn;
      rnn = register_module("rnn", nn::RNN(nn::RNNOptions(in_, hidden_).batch_first(true)));
      break;
    case BaselineKind::kGRU:
      hidden_ = widths.gru;
      gru = register_module("gru", nn::GRU(nn::GRUOptions(in_, hidden_).batch_first(true)));
      break;
    case BaselineKind::kLSTM:
      hidden_ = widths.lstm;
      lstm = register_module("lstm", nn::LSTM(nn::LSTMOptions(in_, hidden_).batch_first(true)));
      break;
    case BaselineKind::kCNN_LSTM: {
      hidden_ = widths.cnn_lstm;
      const int c = widths.cnn_channels;
      const int k = widths.cnn_kernel;
      conv1 = register_module("conv1", nn::Conv1d(nn::Conv1dOptions(in_, c, k).padding(k / 2)));
      conv2 = register_module("conv2", nn::Conv1d(nn::Conv1dOptions(c, c, k).padding(k / 2)));
      seq_in = c;
      lstm = register_module("lstm", nn::LSTM(nn::LSTMOptions(seq_in, hidden_).batch_first(true)));
      break;
    }
    default:
      fail(ErrorKind::kInvalidArgument, "not a recurrent baseline: " + to_string(kind_));
  }
  head = register_module("head", nn::Linear(hidden_, cfg_.f_out * 2 * cfg_.n_t));
  init_placement_buffers(cfg_.n_t);
}

torch::Tensor RecurrentBaseline::forward(const Batch& b) {
  auto x = joint_inputs(b);
  require(x.size(2) == in_ && x.size(1) == cfg_.t_in, ErrorKind::kInvalidArgument,
          "recurrent baseline input shape mismatch");
  torch::Tensor last;
  switch (kind_) {
    case BaselineKind::kRNN: last = std::get<0>(rnn(x)).select(1, -1); break;
    case BaselineKind::kGRU: last = std::get<0>(gru(x)).select(1, -1); break;
    case BaselineKind::kLSTM: last = std::get<0>(lstm(x)).select(1, -1); break;
    case BaselineKind::kCNN_LSTM: {
      auto c = torch::relu(conv1(x.transpose(1, 2)));
      c = torch::relu(conv2(c)).transpose(1, 2);
      last = std::get<0>(lstm(c)).select(1, -1);
      break;
    }
    default: break;
  }
  auto yz = head(last).view({x.size(0), cfg_.f_out, 2 * cfg_.n_t});
  return expand_placements(yz);
}

std::int64_t RecurrentBaseline::flops() const {
  const std::int64_t t = cfg_.t_in;
  const std::int64_t h = hidden_;
  const std::int64_t out = cfg_.f_out * 2 * cfg_.n_t;
  auto cell = [&](std::int64_t in, std::int64_t gates) { return 2 * gates * t * (in * h + h * h); };
  std::int64_t n = 2 * h * out;
  switch (kind_) {
    case BaselineKind::kRNN: return n + cell(in_, 1);
    case BaselineKind::kGRU: return n + cell(in_, 3);
    case BaselineKind::kLSTM: return n + cell(in_, 4);
    case BaselineKind::kCNN_LSTM: {
      const std::int64_t c = widths_.cnn_channels;
      const std::int64_t k = widths_.cnn_kernel;
      return n + 2 * t * k * (in_ * c + c * c) + cell(c, 4);
    }
    default: return n;
  }
}

VanillaTransformer::VanillaTransformer(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  embed = register_module("embed", nn::Linear(joint_input_width(cfg_.n_t), cfg_.d_model));
  backbone = register_module("backbone", Backbone(cfg_));
  init_placement_buffers(cfg_.n_t);
}

torch::Tensor VanillaTransformer::forward(const Batch& b) {
  return expand_placements(backbone(embed(joint_inputs(b))));
}

std::int64_t VanillaTransformer::flops() const {
  return 2 * cfg_.t_in * joint_input_width(cfg_.n_t) * cfg_.d_model + backbone->flops();
}

HoldLast::HoldLast(const ModelConfig& cfg) : f_out_(cfg.f_out) { init_placement_buffers(cfg.n_t); }

torch::Tensor HoldLast::forward(const Batch& b) {
  return b.last_ma.unsqueeze(1).expand({b.last_ma.size(0), f_out_, b.last_ma.size(1)}).clone();
}

Oracle::Oracle() = default;

PredictorPtr make_baseline(BaselineKind kind, const ModelConfig& cfg, const RecurrentWidths& widths) {
  switch (kind) {
    case BaselineKind::kRNN:
    case BaselineKind::kGRU:
    case BaselineKind::kLSTM:
    case BaselineKind::kCNN_LSTM:
      return std::make_shared<RecurrentBaseline>(kind, cfg, widths);
    case BaselineKind::kVanillaTransformer:
      return std::make_shared<VanillaTransformer>(cfg);
    case BaselineKind::kHoldLast:
      return std::make_shared<HoldLast>(cfg);
    case BaselineKind::kOnlinePSO:
      fail(ErrorKind::kInvalidArgument, "OnlinePSO is evaluated through online_pso_predict");
  }
  fail(ErrorKind::kInvalidArgument, "unknown baseline kind");
}

PredictorPtr make_predictor(const std::string& kind, const ModelConfig& cfg) {
  if (kind == "RoleAware" || kind == "roleaware") return std::make_shared<RoleAwareModel>(cfg);
  if (kind == "Oracle" || kind == "oracle") return std::make_shared<Oracle>();
  return make_baseline(parse_baseline_kind(kind), cfg);
}

std::vector<double> online_pso_predict(const Dataset& ds, std::size_t window, const PsoConfig& cfg,
                                       int latency_steps) {
  require(latency_steps >= 0, ErrorKind::kInvalidArgument, "latency_steps must be non-negative");
  require(window < ds.size(), ErrorKind::kInvalidArgument, "window index out of range");
  const auto& ph = ds.physics[window];
  const int step = std::max(0, ds.shape.t_in - 1 - latency_steps);
  SecrecyProblem problem;
  problem.bob = ph.bob.at(static_cast<std::size_t>(step));
  problem.eve = ph.eve.at(static_cast<std::size_t>(step));
  problem.noise_power = ph.noise_power.at(static_cast<std::size_t>(step));
  problem.p_max = ds.scenario.p_max;
  problem.lambda_m = ds.scenario.lambda_m();
  problem.regions = array_regions(ds.scenario);
  const auto rec = optimize_placement(problem, cfg);
  const auto rows = rec.placement.rows();
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(ds.shape.f_out));
  for (int f = 0; f < ds.shape.f_out; ++f) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

}  // namespace mapp::learn
