// SPDX-License-Identifier: Apache-2.0
#include "mapp/learn/training.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mapp/error.hpp"
#include "mapp/learn/evaluation.hpp"

namespace mapp::learn {

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0)) {
    fail(ErrorKind::kConfig, "loss weights must be non-negative");
  }
  if (alpha + beta + gamma <= 0.0) fail(ErrorKind::kConfig, "at least one loss weight must be positive");
}

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kConfig, what);
  };
  check(epochs >= 1, "epochs must be positive");
  check(batch_size >= 1, "batch_size must be positive");
  check(max_lr > 0.0, "max_lr must be positive");
  check(warmup_epochs >= 0 && warmup_epochs < epochs, "warmup_epochs must be smaller than epochs");
  check(grad_clip > 0.0, "grad_clip must be positive");
  check(loss_warmup_end >= 0 && loss_ramp_end > loss_warmup_end,
        "loss_ramp_end must follow loss_warmup_end");
  check(threads >= 1, "threads must be positive");
  start.validate();
  end.validate();
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.max_lr = kv.get_double("max_lr", c.max_lr);
  c.warmup_epochs = static_cast<int>(kv.get_int("warmup_epochs", c.warmup_epochs));
  c.seed = static_cast<std::uint64_t>(kv.get_int("train_seed", static_cast<std::int64_t>(c.seed)));
  c.grad_clip = kv.get_double("grad_clip", c.grad_clip);
  const std::string mode = kv.get_string("loss_mode", "composite");
  if (mode == "composite") {
    c.loss_mode = LossMode::kComposite;
  } else if (mode == "nmse_only") {
    c.loss_mode = LossMode::kNmseOnly;
  } else {
    fail(ErrorKind::kConfig, "loss_mode must be composite or nmse_only");
  }
  c.loss_warmup_end = static_cast<int>(kv.get_int("loss_warmup_end", c.loss_warmup_end));
  c.loss_ramp_end = static_cast<int>(kv.get_int("loss_ramp_end", c.loss_ramp_end));
  auto weights = [&](const std::string& key, LossWeights fallback) {
    const auto v = kv.get_doubles(key, {fallback.alpha, fallback.beta, fallback.gamma});
    if (v.size() != 3) fail(ErrorKind::kConfig, key + " needs three values");
    return LossWeights{v[0], v[1], v[2]};
  };
  c.start = weights("loss_weights_start", c.start);
  c.end = weights("loss_weights_end", c.end);
  c.double_precision = kv.get_bool("double_precision", c.double_precision);
  c.threads = static_cast<int>(kv.get_int("threads", c.threads));
  c.validate();
  return c;
}

void TrainConfig::to_kv(KeyValues& kv) const {
  kv.merge(harness_kv());
  kv.set("loss_mode", loss_mode == LossMode::kComposite ? "composite" : "nmse_only");
  kv.set("loss_warmup_end", loss_warmup_end);
  kv.set("loss_ramp_end", loss_ramp_end);
  auto text = [](const LossWeights& w) {
    return format_double(w.alpha) + ", " + format_double(w.beta) + ", " + format_double(w.gamma);
  };
  kv.set("loss_weights_start", text(start));
  kv.set("loss_weights_end", text(end));
}

KeyValues TrainConfig::harness_kv() const {
  KeyValues kv;
  kv.set("epochs", epochs);
  kv.set("batch_size", batch_size);
  kv.set("max_lr", max_lr);
  kv.set("warmup_epochs", warmup_epochs);
  kv.set("train_seed", static_cast<std::int64_t>(seed));
  kv.set("grad_clip", grad_clip);
  kv.set("optimizer", std::string("adam"));
  kv.set("double_precision", double_precision);
  kv.set("threads", threads);
  return kv;
}

LossWeights schedule_weights(int epoch, const TrainConfig& cfg) {
  if (epoch < 1 || epoch > cfg.epochs) {
    fail(ErrorKind::kInvalidArgument, "epoch " + std::to_string(epoch) + " outside 1.." +
                                          std::to_string(cfg.epochs));
  }
  if (cfg.loss_mode == LossMode::kNmseOnly) return {1.0, 0.0, 0.0};
  if (epoch <= cfg.loss_warmup_end) return cfg.start;
  if (epoch >= cfg.loss_ramp_end) return cfg.end;
  const double u = static_cast<double>(epoch - cfg.loss_warmup_end) /
                   static_cast<double>(cfg.loss_ramp_end - cfg.loss_warmup_end);
  auto lerp = [u](double a, double b) { return a + u * (b - a); };
  return {lerp(cfg.start.alpha, cfg.end.alpha), lerp(cfg.start.beta, cfg.end.beta),
          lerp(cfg.start.gamma, cfg.end.gamma)};
}

double schedule_lr(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg) {
  require(step >= 0 && total_steps >= 1, ErrorKind::kInvalidArgument, "invalid step");
  const double min_lr = cfg.max_lr / 100.0;
  const auto warm = static_cast<std::int64_t>(
      std::llround(static_cast<double>(total_steps) * cfg.warmup_epochs / cfg.epochs));
  if (step < warm) return cfg.max_lr * static_cast<double>(step) / static_cast<double>(warm);
  const std::int64_t last = total_steps - 1;
  if (last <= warm) return cfg.max_lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - warm) / static_cast<double>(last - warm));
  return min_lr + 0.5 * (cfg.max_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

torch::Tensor loss_nmse(const torch::Tensor& pred, const torch::Tensor& target) {
  require(pred.sizes() == target.sizes(), ErrorKind::kInvalidArgument, "loss_nmse: shape mismatch");
  const auto B = pred.size(0);
  auto err = (target - pred).pow(2).reshape({B, -1}).sum(1);
  auto ref = target.pow(2).reshape({B, -1}).sum(1);
  return (err / ref).mean();
}

namespace {

// Real and imaginary parts of h at every antenna: [B, F, N].
std::pair<torch::Tensor, torch::Tensor> channel_at(const torch::Tensor& y, const torch::Tensor& z,
                                                   const torch::Tensor& cre, const torch::Tensor& cim,
                                                   const torch::Tensor& ky, const torch::Tensor& kz) {
  // phase [B, F, N, P]
  auto phase = y.unsqueeze(-1) * ky.unsqueeze(2) + z.unsqueeze(-1) * kz.unsqueeze(2);
  auto c = torch::cos(phase);
  auto s = torch::sin(phase);
  auto re = (cre.unsqueeze(2) * c - cim.unsqueeze(2) * s).sum(-1);
  auto im = (cre.unsqueeze(2) * s + cim.unsqueeze(2) * c).sum(-1);
  return {re, im};
}

}  // namespace

torch::Tensor secrecy_gap(const torch::Tensor& pred, const Batch& b, double p_max) {
  const auto B = pred.size(0);
  const auto F = pred.size(1);
  const auto n = pred.size(2) / 3;
  auto p = pred.view({B, F, n, 3});
  auto y = p.select(3, 1);
  auto z = p.select(3, 2);
  auto [br, bi] = channel_at(y, z, b.bob_coef_re, b.bob_coef_im, b.bob_ky, b.bob_kz);
  auto [er, ei] = channel_at(y, z, b.eve_coef_re, b.eve_coef_im, b.eve_ky, b.eve_kz);
  auto energy = (br * br + bi * bi).sum(-1);
  // h_e^H h_b = sum conj(e) b
  auto cross_re = (er * br + ei * bi).sum(-1);
  auto cross_im = (er * bi - ei * br).sum(-1);
  auto cross2 = cross_re * cross_re + cross_im * cross_im;
  const double inv_ln2 = 1.0 / std::log(2.0);
  auto cb = torch::log1p(p_max * energy / b.noise) * inv_ln2;
  auto ce = torch::log1p(p_max * cross2 / (energy * b.noise)) * inv_ln2;
  return cb - ce;
}

torch::Tensor loss_secrecy(const torch::Tensor& pred, const Batch& b, double p_max) {
  return -secrecy_gap(pred, b, p_max).mean();
}

torch::Tensor loss_constraints(const torch::Tensor& pred, const Geometry& g) {
  const auto B = pred.size(0);
  const auto F = pred.size(1);
  const auto n = pred.size(2) / 3;
  auto p = pred.view({B, F, n, 3});
  auto y = p.select(3, 1);
  auto z = p.select(3, 2);
  auto dy = y.unsqueeze(-1) - y.unsqueeze(-2);
  auto dz = z.unsqueeze(-1) - z.unsqueeze(-2);
  // Zero-distance pairs keep a finite (zero) gradient.
  auto d2 = dy * dy + dz * dz;
  auto apart = d2 > 0;
  auto d = torch::where(apart, torch::sqrt(torch::where(apart, d2, torch::ones_like(d2))),
                        torch::zeros_like(d2));
  auto shortfall = torch::relu(0.5 * g.lambda_m - d).pow(2);
  // Upper triangle only: each pair once.
  auto mask = torch::triu(torch::ones({n, n}, pred.options()), 1);
  auto spacing = (shortfall * mask).sum({-1, -2});
  auto region = (torch::relu(g.y_min - y).pow(2) + torch::relu(y - g.y_max).pow(2) +
                 torch::relu(g.z_min - z).pow(2) + torch::relu(z - g.z_max).pow(2))
                    .sum(-1);
  return (spacing + region).mean();
}

LossTerms composite_loss(const torch::Tensor& pred, const Batch& batch, const Geometry& g,
                         const LossWeights& w) {
  LossTerms t;
  t.nmse = loss_nmse(pred, batch.target);
  t.secrecy = loss_secrecy(pred, batch, g.p_max);
  t.constraint = loss_constraints(pred, g);
  t.total = w.alpha * t.nmse + w.beta * t.secrecy + w.gamma * t.constraint;
  return t;
}

namespace {

std::vector<torch::Tensor> snapshot_state(Predictor& model) {
  std::vector<torch::Tensor> out;
  for (const auto& p : model.parameters()) out.push_back(p.detach().clone());
  for (const auto& b : model.buffers()) out.push_back(b.detach().clone());
  return out;
}

void restore_state(Predictor& model, const std::vector<torch::Tensor>& state) {
  torch::NoGradGuard guard;
  std::size_t i = 0;
  for (auto& p : model.parameters()) p.copy_(state[i++]);
  for (auto& b : model.buffers()) b.copy_(state[i++]);
}

double objective(const LossTerms& t, const TrainConfig& cfg) {
  if (cfg.loss_mode == LossMode::kNmseOnly) return t.nmse.item<double>();
  return cfg.end.alpha * t.nmse.item<double>() + cfg.end.beta * t.secrecy.item<double>() +
         cfg.end.gamma * t.constraint.item<double>();
}

}  // namespace

FitResult fit(Predictor& model, const Dataset& train, const Dataset& valid, const TrainConfig& cfg,
              const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  require(train.size() > 0 && valid.size() > 0, ErrorKind::kInvalidArgument,
          "training and validation sets must be nonempty");
  require(!train.stats.empty(), ErrorKind::kState, "training set has no normalization statistics");
  torch::set_num_threads(cfg.threads);
  torch::manual_seed(cfg.seed);
  const auto dtype = cfg.double_precision ? torch::kFloat64 : torch::kFloat32;
  model.to(dtype);
  model.set_placement_stats(train.stats);

  const Geometry geometry = Geometry::from_scenario(train.scenario, dtype);
  const Batch train_all = make_batch(train, dtype);
  const Batch valid_all = make_batch(valid, dtype);

  FitResult result;
  result.harness_hash = cfg.harness_kv().hash();

  std::vector<torch::Tensor> params;
  for (const auto& p : model.parameters()) {
    if (p.requires_grad()) params.push_back(p);
  }
  const bool trainable = !params.empty();
  std::unique_ptr<torch::optim::Adam> opt;
  if (trainable) opt = std::make_unique<torch::optim::Adam>(params, torch::optim::AdamOptions(cfg.max_lr));

  const auto n = static_cast<std::int64_t>(train.size());
  const std::int64_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = per_epoch * cfg.epochs;
  std::int64_t step = 0;
  std::vector<torch::Tensor> best_state = snapshot_state(model);
  double best = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const LossWeights w = schedule_weights(epoch, cfg);
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::mt19937_64 rng(stream_seed(cfg.seed, 0x65706f6368, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    model.train();
    EpochLog log;
    log.epoch = epoch;
    log.weights = w;
    for (std::int64_t s = 0; s < per_epoch; ++s, ++step) {
      const auto lo = s * cfg.batch_size;
      const auto hi = std::min(n, lo + cfg.batch_size);
      auto idx = torch::from_blob(order.data() + lo, {hi - lo}, torch::kInt64).clone();
      const Batch b = select(train_all, idx);
      const double lr = schedule_lr(step, total_steps, cfg);
      auto pred = model.forward(b);
      auto terms = composite_loss(pred, b, geometry, w);
      const double total = terms.total.item<double>();
      if (!std::isfinite(total)) {
        fail(ErrorKind::kNumerical,
             "non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                 " (nmse=" + format_double(terms.nmse.item<double>()) +
                 ", secrecy=" + format_double(terms.secrecy.item<double>()) +
                 ", constraint=" + format_double(terms.constraint.item<double>()) + ")");
      }
      if (trainable) {
        for (auto& group : opt->param_groups()) {
          static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
        }
        opt->zero_grad();
        terms.total.backward();
        torch::nn::utils::clip_grad_norm_(params, cfg.grad_clip);
        opt->step();
      }
      StepLog sl{step, epoch, lr, w, total, terms.nmse.item<double>(), terms.secrecy.item<double>(),
                 terms.constraint.item<double>()};
      const double share = static_cast<double>(hi - lo) / static_cast<double>(n);
      log.total += share * sl.total;
      log.nmse += share * sl.nmse;
      log.secrecy += share * sl.secrecy;
      log.constraint += share * sl.constraint;
      result.steps.push_back(sl);
    }

    model.eval();
    {
      torch::NoGradGuard guard;
      auto pred = model.forward(valid_all);
      auto terms = composite_loss(pred, valid_all, geometry, w);
      log.valid_objective = objective(terms, cfg);
    }
    const auto outcome = evaluate_placements(valid, predict_all(model, valid), model.kind());
    log.valid_asr = outcome.report.asr;
    log.valid_spsc = outcome.report.spsc;
    log.valid_nmse = outcome.report.nmse;
    if (log.valid_objective < best) {
      best = log.valid_objective;
      result.best_epoch = epoch;
      best_state = snapshot_state(model);
    }
    result.curves.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  restore_state(model, best_state);
  model.eval();
  result.best_objective = best;
  return result;
}

std::string curves_csv(const FitResult& r) {
  std::ostringstream os;
  os << "epoch,alpha,beta,gamma,l_total,l_nmse,l_secrecy,l_constraint,valid_asr,valid_spsc,"
        "valid_nmse,valid_objective\n";
  for (const auto& c : r.curves) {
    os << c.epoch << ',' << format_double(c.weights.alpha) << ',' << format_double(c.weights.beta)
       << ',' << format_double(c.weights.gamma) << ',' << format_double(c.total) << ','
       << format_double(c.nmse) << ',' << format_double(c.secrecy) << ','
       << format_double(c.constraint) << ',' << format_double(c.valid_asr) << ','
       << format_double(c.valid_spsc) << ',' << format_double(c.valid_nmse) << ','
       << format_double(c.valid_objective) << '\n';
  }
  return os.str();
}

std::string steps_csv(const FitResult& r) {
  std::ostringstream os;
  os << "step,epoch,lr,alpha,beta,gamma,l_total,l_nmse,l_secrecy,l_constraint\n";
  for (const auto& s : r.steps) {
    os << s.step << ',' << s.epoch << ',' << format_double(s.lr) << ','
       << format_double(s.weights.alpha) << ',' << format_double(s.weights.beta) << ','
       << format_double(s.weights.gamma) << ',' << format_double(s.total) << ','
       << format_double(s.nmse) << ',' << format_double(s.secrecy) << ','
       << format_double(s.constraint) << '\n';
  }
  return os.str();
}

}  // namespace mapp::learn
