// SPDX-License-Identifier: Apache-2.0
#include "mapp/learn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "mapp/error.hpp"

namespace mapp::learn {

namespace fs = std::filesystem;
using json = nlohmann::json;
namespace nn = torch::nn;

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kConfig, what);
  };
  check(d_model > 0 && heads > 0 && d_model % heads == 0, "d_model must be divisible by heads");
  check(n_enc >= 1 && n_dec >= 1, "encoder and decoder need at least one layer");
  check(d_ff > 0, "d_ff must be positive");
  check(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  check(t_in >= 2 && f_out >= 1 && n_t >= 1, "invalid window or array size");
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
  ModelConfig c;
  c.d_model = static_cast<int>(kv.get_int("d_model", c.d_model));
  c.n_enc = static_cast<int>(kv.get_int("n_enc", c.n_enc));
  c.n_dec = static_cast<int>(kv.get_int("n_dec", c.n_dec));
  c.heads = static_cast<int>(kv.get_int("heads", c.heads));
  c.d_ff = static_cast<int>(kv.get_int("d_ff", c.d_ff));
  c.dropout = kv.get_double("dropout", c.dropout);
  c.t_in = static_cast<int>(kv.get_int("t_in", c.t_in));
  c.f_out = static_cast<int>(kv.get_int("f_out", c.f_out));
  c.n_t = static_cast<int>(kv.get_int("n_t", c.n_t));
  c.role_aware = kv.get_bool("role_aware", c.role_aware);
  c.semantic = kv.get_bool("semantic", c.semantic);
  c.decoder_identity_attention =
      kv.get_bool("decoder_identity_attention", c.decoder_identity_attention);
  c.validate();
  return c;
}

void ModelConfig::to_kv(KeyValues& kv) const {
  kv.set("d_model", d_model);
  kv.set("n_enc", n_enc);
  kv.set("n_dec", n_dec);
  kv.set("heads", heads);
  kv.set("d_ff", d_ff);
  kv.set("dropout", dropout);
  kv.set("t_in", t_in);
  kv.set("f_out", f_out);
  kv.set("n_t", n_t);
  kv.set("role_aware", role_aware);
  kv.set("semantic", semantic);
  kv.set("decoder_identity_attention", decoder_identity_attention);
}

// ---------------------------------------------------------------------------
// Predictor

void Predictor::init_placement_buffers(int n_t) {
  mu_yz_ = register_buffer("placement_mean", torch::zeros({2 * n_t}));
  sd_yz_ = register_buffer("placement_std", torch::ones({2 * n_t}));
}

void Predictor::set_placement_stats(const NormStats& stats) {
  auto [mu, sd] = placement_stats(stats, mu_yz_.scalar_type());
  require(mu.numel() == mu_yz_.numel(), ErrorKind::kInvalidArgument,
          "placement statistics do not match the antenna count");
  torch::NoGradGuard guard;
  mu_yz_.copy_(mu);
  sd_yz_.copy_(sd);
  stats_ready_ = true;
}

std::int64_t Predictor::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

torch::Tensor Predictor::expand_placements(const torch::Tensor& yz_norm) const {
  require(stats_ready_, ErrorKind::kState, "predictor has no normalization statistics");
  const auto B = yz_norm.size(0);
  const auto F = yz_norm.size(1);
  const auto n = yz_norm.size(2) / 2;
  auto yz = (yz_norm * sd_yz_ + mu_yz_).view({B, F, n, 2});
  auto x = torch::zeros({B, F, n, 1}, yz.options());
  return torch::cat({x, yz}, 3).view({B, F, 3 * n});
}

// ---------------------------------------------------------------------------
// Building blocks

torch::Tensor sinusoidal_encoding(std::int64_t max_len, std::int64_t d) {
  auto pe = torch::zeros({max_len, d}, torch::kFloat64);
  auto acc = pe.accessor<double, 2>();
  for (std::int64_t pos = 0; pos < max_len; ++pos) {
    for (std::int64_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      acc[pos][i] = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe.to(torch::kFloat32);
}

std::pair<torch::Tensor, torch::Tensor> attention(const torch::Tensor& q, const torch::Tensor& k,
                                                  const torch::Tensor& v) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
  auto w = torch::softmax(torch::matmul(q, k.transpose(-2, -1)) * scale, -1);
  return {torch::matmul(w, v), w};
}

MultiHeadAttentionImpl::MultiHeadAttentionImpl(int d, int h) : d_model(d), heads(h) {
  wq = register_module("wq", nn::Linear(d, d));
  wk = register_module("wk", nn::Linear(d, d));
  wv = register_module("wv", nn::Linear(d, d));
  wo = register_module("wo", nn::Linear(d, d));
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& q, const torch::Tensor& kv) {
  const auto B = q.size(0);
  const auto tq = q.size(1);
  const auto tk = kv.size(1);
  const auto dk = d_model / heads;
  auto split = [&](const torch::Tensor& x, std::int64_t t) {
    return x.view({B, t, heads, dk}).transpose(1, 2);
  };
  auto [out, w] = attention(split(wq(q), tq), split(wk(kv), tk), split(wv(kv), tk));
  return wo(out.transpose(1, 2).contiguous().view({B, tq, d_model}));
}

std::int64_t MultiHeadAttentionImpl::flops(std::int64_t tq, std::int64_t tk) const {
  const std::int64_t d = d_model;
  return 2 * d * d * (2 * tq + 2 * tk) + 2 * 2 * tq * tk * d;
}

CrossRoleAttentionImpl::CrossRoleAttentionImpl(int d) : d_model(d) {
  wq = register_module("wq", nn::Linear(d, d));
  wk = register_module("wk", nn::Linear(d, d));
  wv = register_module("wv", nn::Linear(d, d));
  norm = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({d})));
}

torch::Tensor CrossRoleAttentionImpl::forward(const torch::Tensor& bob, const torch::Tensor& eve) {
  require(bob.sizes() == eve.sizes(), ErrorKind::kInvalidArgument,
          "cross-role attention needs matching shapes");
  auto [out, w] = attention(wq(bob), wk(eve), wv(eve));
  return norm(bob + out);
}

torch::Tensor CrossRoleAttentionImpl::weights(const torch::Tensor& bob, const torch::Tensor& eve) {
  return attention(wq(bob), wk(eve), wv(eve)).second;
}

std::int64_t CrossRoleAttentionImpl::flops(std::int64_t t) const {
  const std::int64_t d = d_model;
  return 2 * d * d * 3 * t + 2 * 2 * t * t * d;
}

EncoderLayerImpl::EncoderLayerImpl(int d, int h, int ff, double dropout) : d_model(d), d_ff(ff) {
  attn = register_module("attn", MultiHeadAttention(d, h));
  ff1 = register_module("ff1", nn::Linear(d, ff));
  ff2 = register_module("ff2", nn::Linear(ff, d));
  norm1 = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({d})));
  norm2 = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({d})));
  drop = register_module("drop", nn::Dropout(dropout));
}

torch::Tensor EncoderLayerImpl::forward(const torch::Tensor& x) {
  auto h = norm1(x + drop(attn(x, x)));
  return norm2(h + drop(ff2(torch::relu(ff1(h)))));
}

std::int64_t EncoderLayerImpl::flops(std::int64_t t) const {
  return attn->flops(t, t) + 2 * 2 * t * d_model * d_ff;
}

DecoderLayerImpl::DecoderLayerImpl(int d, int h, int ff, double dropout, bool identity)
    : d_model(d), d_ff(ff), identity_attention(identity) {
  self_attn = register_module("self_attn", MultiHeadAttention(d, h));
  cross_attn = register_module("cross_attn", MultiHeadAttention(d, h));
  ff1 = register_module("ff1", nn::Linear(d, ff));
  ff2 = register_module("ff2", nn::Linear(ff, d));
  norm1 = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({d})));
  norm2 = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({d})));
  norm3 = register_module("norm3", nn::LayerNorm(nn::LayerNormOptions({d})));
  drop = register_module("drop", nn::Dropout(dropout));
}

torch::Tensor DecoderLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& memory) {
  torch::Tensor h = x;
  if (!identity_attention) {
    h = norm1(h + drop(self_attn(h, h)));
    h = norm2(h + drop(cross_attn(h, memory)));
  }
  return norm3(h + drop(ff2(torch::relu(ff1(h)))));
}

std::int64_t DecoderLayerImpl::flops(std::int64_t f, std::int64_t t) const {
  const std::int64_t ffn = 2 * 2 * f * d_model * d_ff;
  if (identity_attention) return ffn;
  return self_attn->flops(f, f) + cross_attn->flops(f, t) + ffn;
}

BackboneImpl::BackboneImpl(const ModelConfig& c) : cfg(c) {
  cfg.validate();
  encoder = register_module("encoder", nn::ModuleList());
  for (int i = 0; i < cfg.n_enc; ++i) {
    encoder->push_back(EncoderLayer(cfg.d_model, cfg.heads, cfg.d_ff, cfg.dropout));
  }
  decoder = register_module("decoder", nn::ModuleList());
  for (int i = 0; i < cfg.n_dec; ++i) {
    decoder->push_back(DecoderLayer(cfg.d_model, cfg.heads, cfg.d_ff, cfg.dropout,
                                    cfg.decoder_identity_attention));
  }
  head = register_module("head", nn::Linear(cfg.d_model, 2 * cfg.n_t));
  drop = register_module("drop", nn::Dropout(cfg.dropout));
  queries = register_parameter("queries", torch::randn({cfg.f_out, cfg.d_model}) * 0.02);
  pe = register_buffer("pe", sinusoidal_encoding(cfg.t_in, cfg.d_model));
}

torch::Tensor BackboneImpl::decode(const torch::Tensor& fused) {
  require(fused.dim() == 3 && fused.size(1) == cfg.t_in && fused.size(2) == cfg.d_model,
          ErrorKind::kInvalidArgument, "backbone input must be [B, T, d_model]");
  auto memory = drop(fused + pe);
  for (const auto& layer : *encoder) memory = layer->as<EncoderLayer>()->forward(memory);
  auto x = queries.unsqueeze(0).expand({fused.size(0), cfg.f_out, cfg.d_model});
  for (const auto& layer : *decoder) x = layer->as<DecoderLayer>()->forward(x, memory);
  return x;
}

torch::Tensor BackboneImpl::forward(const torch::Tensor& fused) { return head(decode(fused)); }

std::int64_t BackboneImpl::flops() const {
  std::int64_t n = 0;
  for (const auto& layer : *encoder) n += layer->as<EncoderLayer>()->flops(cfg.t_in);
  for (const auto& layer : *decoder) n += layer->as<DecoderLayer>()->flops(cfg.f_out, cfg.t_in);
  return n + 2 * cfg.f_out * cfg.d_model * 2 * cfg.n_t;
}

StreamEmbeddingImpl::StreamEmbeddingImpl(int in_dim, int d, bool is_deep)
    : in(in_dim), d_model(d), deep(is_deep) {
  fc1 = register_module("fc1", nn::Linear(in, d));
  if (deep) fc2 = register_module("fc2", nn::Linear(d, d));
  norm = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({d})));
}

torch::Tensor StreamEmbeddingImpl::pre_norm(const torch::Tensor& x) {
  require(x.size(-1) == in, ErrorKind::kInvalidArgument, "embedding input width mismatch");
  return deep ? fc2(torch::relu(fc1(x))) : fc1(x);
}

torch::Tensor StreamEmbeddingImpl::forward(const torch::Tensor& x) { return norm(pre_norm(x)); }

std::int64_t StreamEmbeddingImpl::flops(std::int64_t t) const {
  return 2 * t * (in * d_model + (deep ? d_model * d_model : 0));
}

torch::Tensor fuse(const std::vector<torch::Tensor>& embeddings, const torch::Tensor& weights) {
  require(!embeddings.empty() && weights.numel() >= static_cast<std::int64_t>(embeddings.size()),
          ErrorKind::kInvalidArgument, "fusion needs one weight per embedding");
  torch::Tensor out = weights[0] * embeddings[0];
  for (std::size_t i = 1; i < embeddings.size(); ++i) {
    out = out + weights[static_cast<std::int64_t>(i)] * embeddings[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// RoleAwareModel

RoleAwareModel::RoleAwareModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.d_model;
  const int n = cfg_.n_t;
  const bool deep_bob = cfg_.role_aware;
  bob_pos_embed = register_module("bob_pos_embed", StreamEmbedding(3, d, deep_bob));
  bob_csi_embed = register_module("bob_csi_embed", StreamEmbedding(2 * n, d, deep_bob));
  eve_pos_embed = register_module("eve_pos_embed", StreamEmbedding(3, d, false));
  eve_csi_embed = register_module("eve_csi_embed", StreamEmbedding(2 * n, d, false));
  ma_embed = register_module("ma_embed", StreamEmbedding(3 * n, d, false));
  if (cfg_.semantic) {
    semantic_mlp = register_module(
        "semantic_mlp",
        nn::Sequential(nn::Linear(kNumSemantic, d), nn::Functional(torch::relu), nn::Linear(d, d)));
  }
  cross = register_module("cross", CrossRoleAttention(d));
  fusion_weights = register_parameter("fusion_weights", torch::full({6}, 1.0 / 6.0));
  backbone = register_module("backbone", Backbone(cfg_));
  init_placement_buffers(n);

  const std::int64_t t = cfg_.t_in;
  embed_flops_ = bob_pos_embed->flops(t) + bob_csi_embed->flops(t) + eve_pos_embed->flops(t) +
                 eve_csi_embed->flops(t) + ma_embed->flops(t) + cross->flops(t);
  if (cfg_.semantic) embed_flops_ += 2 * t * (kNumSemantic * d + d * d);
}

RoleEmbeddings RoleAwareModel::embed(const Batch& b) {
  return {bob_pos_embed(b.bob_pos), eve_pos_embed(b.eve_pos), bob_csi_embed(b.bob_csi),
          eve_csi_embed(b.eve_csi), ma_embed(b.ma_pos)};
}

torch::Tensor RoleAwareModel::semantics(const Batch& b) {
  require(cfg_.semantic, ErrorKind::kState, "semantic extractor disabled");
  return semantic_mlp->forward(b.semantic);
}

std::vector<torch::Tensor> RoleAwareModel::fusion_inputs(const Batch& b) {
  require(b.bob_pos.dim() == 3 && b.bob_pos.size(1) == cfg_.t_in, ErrorKind::kInvalidArgument,
          "input window length does not match the model");
  auto e = embed(b);
  std::vector<torch::Tensor> inputs = {e.bob_pos, e.eve_pos, e.ma_pos, cross(e.bob_csi, e.eve_csi),
                                       e.eve_csi};
  if (cfg_.semantic) inputs.push_back(semantics(b));
  return inputs;
}

torch::Tensor RoleAwareModel::forward(const Batch& b) {
  return expand_placements(backbone(fuse(fusion_inputs(b), fusion_weights)));
}

std::int64_t RoleAwareModel::flops() const { return embed_flops_ + backbone->flops(); }

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::vector<std::pair<std::string, torch::Tensor>> state_tensors(Predictor& model) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : model.named_parameters()) out.emplace_back(p.key(), p.value());
  for (const auto& b : model.named_buffers()) out.emplace_back(b.key(), b.value());
  return out;
}

}  // namespace

void save_checkpoint(Predictor& model, const KeyValues& model_config, const NormStats& stats,
                     const KeyValues& extra, const fs::path& dir) {
  fs::create_directories(dir);
  std::string blob;
  json tensors = json::array();
  for (const auto& [name, t] : state_tensors(model)) {
    auto c = t.detach().to(torch::kCPU).contiguous();
    const std::string dtype = c.scalar_type() == torch::kFloat64 ? "float64" : "float32";
    if (dtype == "float32") c = c.to(torch::kFloat32);
    const std::size_t bytes = static_cast<std::size_t>(c.numel()) * c.element_size();
    tensors.push_back({{"name", name},
                       {"dtype", dtype},
                       {"shape", c.sizes().vec()},
                       {"offset", blob.size()},
                       {"bytes", bytes}});
    const auto* p = static_cast<const char*>(c.data_ptr());
    blob.append(p, bytes);
  }
  json m;
  m["format"] = "mapp-checkpoint";
  m["version"] = 1;
  m["kind"] = model.kind();
  m["model_config"] = model_config.entries();
  m["extra"] = extra.entries();
  m["norm_stats"] = json::parse(norm_stats_to_json(stats));
  m["tensors"] = tensors;
  m["file"] = "state.bin";
  m["fnv1a64"] = hex64(fnv1a64(blob));
  {
    std::ofstream f(dir / "state.bin", std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::kIo, "cannot write checkpoint state");
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) fail(ErrorKind::kIo, "cannot write checkpoint manifest");
  f << m.dump(2) << "\n";
}

namespace {

json read_manifest(const fs::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) fail(ErrorKind::kIo, "missing checkpoint manifest in " + dir.string());
  try {
    json m = json::parse(f);
    if (m.at("format") != "mapp-checkpoint") fail(ErrorKind::kCorruptDataset, "not a checkpoint");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::kCorruptDataset, std::string("malformed checkpoint manifest: ") + e.what());
  }
}

KeyValues kv_from(const json& j) {
  KeyValues kv;
  for (const auto& [k, v] : j.items()) kv.set(k, v.get<std::string>());
  return kv;
}

}  // namespace

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
  const json m = read_manifest(dir);
  CheckpointInfo info;
  info.kind = m.at("kind").get<std::string>();
  info.model_config = kv_from(m.at("model_config"));
  info.extra = kv_from(m.at("extra"));
  info.stats = norm_stats_from_json(m.at("norm_stats").dump());
  return info;
}

void load_checkpoint_state(Predictor& model, const fs::path& dir) {
  const json m = read_manifest(dir);
  std::ifstream f(dir / m.at("file").get<std::string>(), std::ios::binary);
  if (!f) fail(ErrorKind::kCorruptDataset, "missing checkpoint state file");
  const std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (hex64(fnv1a64(blob)) != m.at("fnv1a64").get<std::string>()) {
    fail(ErrorKind::kCorruptDataset, "checkpoint state hash mismatch");
  }
  auto targets = state_tensors(model);
  const json& tensors = m.at("tensors");
  if (tensors.size() != targets.size()) {
    fail(ErrorKind::kCorruptDataset, "checkpoint tensor count does not match the model");
  }
  torch::NoGradGuard guard;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const json& e = tensors[i];
    auto& [name, dst] = targets[i];
    if (e.at("name") != name) fail(ErrorKind::kCorruptDataset, "checkpoint tensor order mismatch at " + name);
    const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    if (shape != dst.sizes().vec()) fail(ErrorKind::kCorruptDataset, "checkpoint shape mismatch for " + name);
    const auto dtype = e.at("dtype") == "float64" ? torch::kFloat64 : torch::kFloat32;
    const auto offset = e.at("offset").get<std::size_t>();
    const auto bytes = e.at("bytes").get<std::size_t>();
    if (offset + bytes > blob.size()) fail(ErrorKind::kCorruptDataset, "checkpoint state truncated");
    auto src = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (static_cast<std::size_t>(src.numel()) * src.element_size() != bytes) {
      fail(ErrorKind::kCorruptDataset, "checkpoint byte count mismatch for " + name);
    }
    std::memcpy(src.data_ptr(), blob.data() + offset, bytes);
    dst.copy_(src.to(dst.scalar_type()));
  }
  const auto info = read_checkpoint_info(dir);
  if (!info.stats.empty()) model.set_placement_stats(info.stats);
}

}  // namespace mapp::learn
