// SPDX-License-Identifier: Apache-2.0
//
// Role-aware placement predictor and the shared encoder-decoder backbone.
// All predictors map a Batch to [B, F, 3N] placements in meters.
#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "mapp/config.hpp"
#include "mapp/dataset.hpp"
#include "mapp/learn/batch.hpp"

namespace mapp::learn {

struct ModelConfig {
  int d_model = 128;
  int n_enc = 3;
  int n_dec = 3;
  int heads = 8;
  int d_ff = 256;
  double dropout = 0.1;
  int t_in = 16;
  int f_out = 4;
  int n_t = 9;

  // Ablation switches.
  bool role_aware = true;
  bool semantic = true;
  /// Decoder self- and cross-attention return their query unchanged.
  bool decoder_identity_attention = false;

  void validate() const;
  static ModelConfig from_kv(const KeyValues& kv);
  void to_kv(KeyValues& kv) const;
};

/// Base for every learned or rule-based predictor.
class Predictor : public torch::nn::Module {
 public:
  /// [B, F, 3N] placements in meters with a zero x column.
  virtual torch::Tensor forward(const Batch& batch) = 0;
  /// Analytic multiply-add count x 2 for one sample.
  virtual std::int64_t flops() const = 0;
  virtual std::string kind() const = 0;

  /// Installs the placement statistics used to de-normalize predictions.
  void set_placement_stats(const NormStats& stats);
  bool has_placement_stats() const { return stats_ready_; }

  std::int64_t parameter_count() const;

 protected:
  /// [B, F, 2N] normalized (y, z) to [B, F, 3N] meters.
  torch::Tensor expand_placements(const torch::Tensor& yz_norm) const;
  void init_placement_buffers(int n_t);

  torch::Tensor mu_yz_;
  torch::Tensor sd_yz_;
  bool stats_ready_ = false;
};

using PredictorPtr = std::shared_ptr<Predictor>;

// --- building blocks -------------------------------------------------------

/// Sinusoidal table [max_len, d].
torch::Tensor sinusoidal_encoding(std::int64_t max_len, std::int64_t d);

/// Scaled dot-product attention; returns (output, weights).
std::pair<torch::Tensor, torch::Tensor> attention(const torch::Tensor& q, const torch::Tensor& k,
                                                  const torch::Tensor& v);

class MultiHeadAttentionImpl : public torch::nn::Module {
 public:
  MultiHeadAttentionImpl(int d_model, int heads);
  torch::Tensor forward(const torch::Tensor& q, const torch::Tensor& kv);
  std::int64_t flops(std::int64_t tq, std::int64_t tk) const;

  torch::nn::Linear wq{nullptr}, wk{nullptr}, wv{nullptr}, wo{nullptr};
  int d_model;
  int heads;
};
TORCH_MODULE(MultiHeadAttention);

/// LayerNorm(E_bob + softmax(Q K^T / sqrt(d)) V), Q from Bob, K and V from Eve.
class CrossRoleAttentionImpl : public torch::nn::Module {
 public:
  explicit CrossRoleAttentionImpl(int d_model);
  torch::Tensor forward(const torch::Tensor& bob, const torch::Tensor& eve);
  /// Attention weights [B, T, T] for inspection.
  torch::Tensor weights(const torch::Tensor& bob, const torch::Tensor& eve);
  std::int64_t flops(std::int64_t t) const;

  torch::nn::Linear wq{nullptr}, wk{nullptr}, wv{nullptr};
  torch::nn::LayerNorm norm{nullptr};
  int d_model;
};
TORCH_MODULE(CrossRoleAttention);

class EncoderLayerImpl : public torch::nn::Module {
 public:
  EncoderLayerImpl(int d_model, int heads, int d_ff, double dropout);
  torch::Tensor forward(const torch::Tensor& x);
  std::int64_t flops(std::int64_t t) const;

  MultiHeadAttention attn{nullptr};
  torch::nn::Linear ff1{nullptr}, ff2{nullptr};
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Dropout drop{nullptr};
  int d_model, d_ff;
};
TORCH_MODULE(EncoderLayer);

class DecoderLayerImpl : public torch::nn::Module {
 public:
  DecoderLayerImpl(int d_model, int heads, int d_ff, double dropout, bool identity_attention);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& memory);
  std::int64_t flops(std::int64_t f, std::int64_t t) const;

  MultiHeadAttention self_attn{nullptr}, cross_attn{nullptr};
  torch::nn::Linear ff1{nullptr}, ff2{nullptr};
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr};
  torch::nn::Dropout drop{nullptr};
  int d_model, d_ff;
  bool identity_attention;
};
TORCH_MODULE(DecoderLayer);

/// Positional encoding, encoder stack, F learned queries, decoder stack and
/// the (y, z) head. Consumes the fused [B, T, d] sequence.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const ModelConfig& cfg);
  /// Returns [B, F, 2N] normalized (y, z).
  torch::Tensor forward(const torch::Tensor& fused);
  /// Decoder output [B, F, d] before the head.
  torch::Tensor decode(const torch::Tensor& fused);
  std::int64_t flops() const;

  torch::nn::ModuleList encoder{nullptr};
  torch::nn::ModuleList decoder{nullptr};
  torch::nn::Linear head{nullptr};
  torch::nn::Dropout drop{nullptr};
  torch::Tensor queries;
  torch::Tensor pe;
  ModelConfig cfg;
};
TORCH_MODULE(Backbone);

/// Deep: Linear -> ReLU -> Linear -> LayerNorm. Shallow: Linear -> LayerNorm.
class StreamEmbeddingImpl : public torch::nn::Module {
 public:
  StreamEmbeddingImpl(int in, int d_model, bool deep);
  torch::Tensor forward(const torch::Tensor& x);
  /// Activations entering the LayerNorm.
  torch::Tensor pre_norm(const torch::Tensor& x);
  std::int64_t flops(std::int64_t t) const;

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  torch::nn::LayerNorm norm{nullptr};
  int in, d_model;
  bool deep;
};
TORCH_MODULE(StreamEmbedding);

/// Sum_i w_i E_i over a list of equally shaped embeddings.
torch::Tensor fuse(const std::vector<torch::Tensor>& embeddings, const torch::Tensor& weights);

struct RoleEmbeddings {
  torch::Tensor bob_pos, eve_pos, bob_csi, eve_csi, ma_pos;
};

class RoleAwareModel : public Predictor {
 public:
  explicit RoleAwareModel(const ModelConfig& cfg);

  torch::Tensor forward(const Batch& batch) override;
  std::int64_t flops() const override;
  std::string kind() const override { return "RoleAware"; }

  RoleEmbeddings embed(const Batch& batch);
  torch::Tensor semantics(const Batch& batch);
  /// The six (or five without semantics) fused inputs in fusion order:
  /// bob_pos, eve_pos, ma_pos, bob_enh, eve_csi, sem.
  std::vector<torch::Tensor> fusion_inputs(const Batch& batch);

  const ModelConfig& config() const { return cfg_; }

  StreamEmbedding bob_pos_embed{nullptr}, bob_csi_embed{nullptr}, eve_pos_embed{nullptr},
      eve_csi_embed{nullptr}, ma_embed{nullptr};
  torch::nn::Sequential semantic_mlp{nullptr};
  CrossRoleAttention cross{nullptr};
  torch::Tensor fusion_weights;
  Backbone backbone{nullptr};

 private:
  ModelConfig cfg_;
  std::int64_t embed_flops_ = 0;
};

/// Writes a checkpoint directory: manifest.json plus one raw tensor file.
void save_checkpoint(Predictor& model, const KeyValues& model_config, const NormStats& stats,
                     const KeyValues& extra, const std::filesystem::path& dir);

struct CheckpointInfo {
  std::string kind;
  KeyValues model_config;
  KeyValues extra;
  NormStats stats;
};
CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);
/// Loads parameters and buffers into an already constructed model.
void load_checkpoint_state(Predictor& model, const std::filesystem::path& dir);

}  // namespace mapp::learn
