// SPDX-License-Identifier: Apache-2.0
#include "mapp/learn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include "mapp/error.hpp"
#include "mapp/learn/baselines.hpp"

namespace mapp::learn {

Placements predict_all(Predictor& model, const Dataset& ds, int batch_size) {
  require(batch_size > 0, ErrorKind::kInvalidArgument, "batch_size must be positive");
  torch::NoGradGuard guard;
  model.eval();
  auto dtype = torch::kFloat32;
  for (const auto& p : model.parameters()) {
    dtype = p.scalar_type();
    break;
  }
  Placements out;
  out.reserve(ds.size());
  for (std::size_t lo = 0; lo < ds.size(); lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(ds.size(), lo + static_cast<std::size_t>(batch_size));
    std::vector<std::size_t> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    auto pred = model.forward(make_batch(ds, idx, dtype)).to(torch::kFloat64).contiguous();
    const auto per = static_cast<std::size_t>(pred.size(1) * pred.size(2));
    const double* p = pred.data_ptr<double>();
    for (std::size_t i = 0; i < idx.size(); ++i) out.emplace_back(p + i * per, p + (i + 1) * per);
  }
  return out;
}

std::vector<metrics::MrtCapacities> window_capacities(const Dataset& ds, std::size_t window,
                                                      std::span<const double> placement) {
  const auto& ph = ds.physics.at(window);
  const int T = ds.shape.t_in;
  const int F = ds.shape.f_out;
  const auto n = static_cast<std::size_t>(ds.n_antennas());
  require(placement.size() == static_cast<std::size_t>(F) * 3 * n, ErrorKind::kInvalidArgument,
          "placement shape does not match the window");
  const auto regions = array_regions(ds.scenario);
  std::vector<metrics::MrtCapacities> out;
  std::vector<double> yz(2 * n);
  CVector hb(n), he(n);
  for (int f = 0; f < F; ++f) {
    const double* row = placement.data() + static_cast<std::size_t>(f) * 3 * n;
    for (std::size_t k = 0; k < n; ++k) {
      yz[2 * k] = std::clamp(row[3 * k + 1], regions[k].y_min, regions[k].y_max);
      yz[2 * k + 1] = std::clamp(row[3 * k + 2], regions[k].z_min, regions[k].z_max);
    }
    const auto step = static_cast<std::size_t>(T + f);
    ph.bob.at(step).evaluate(yz, hb);
    ph.eve.at(step).evaluate(yz, he);
    out.push_back(metrics::mrt_capacities(hb, he, ph.noise_power.at(step), ds.scenario.p_max));
  }
  return out;
}

EvalOutcome evaluate_placements(const Dataset& ds, const Placements& preds, const std::string& name) {
  require(ds.size() > 0, ErrorKind::kInvalidArgument, "empty evaluation set");
  require(preds.size() == ds.size(), ErrorKind::kInvalidArgument, "one prediction per window required");
  EvalOutcome out;
  out.report.model = name;
  std::vector<double> targets, flat;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto caps = window_capacities(ds, i, preds[i]);
    std::vector<double> cb, ce;
    for (const auto& c : caps) {
      cb.push_back(c.bob);
      ce.push_back(c.eve);
    }
    out.window_asr.push_back(metrics::asr(cb, ce));
    targets.insert(targets.end(), ds.windows[i].target.begin(), ds.windows[i].target.end());
    flat.insert(flat.end(), preds[i].begin(), preds[i].end());
  }
  out.report.asr = std::accumulate(out.window_asr.begin(), out.window_asr.end(), 0.0) /
                   static_cast<double>(out.window_asr.size());
  out.report.spsc = metrics::spsc(out.window_asr);
  out.report.nmse = metrics::mean_nmse(targets, flat, ds.size());
  return out;
}

void account_cost(Predictor& model, const Dataset& sample, const CostOptions& opts,
                  metrics::MetricsReport& report) {
  report.param_count = model.parameter_count();
  report.flops = model.flops();
  report.inference_ms = 0.0;
  if (opts.timing_runs <= 0 || sample.size() == 0) return;
  torch::NoGradGuard guard;
  model.eval();
  auto dtype = torch::kFloat32;
  for (const auto& p : model.parameters()) {
    dtype = p.scalar_type();
    break;
  }
  const std::size_t first = 0;
  const Batch one = make_batch(sample, std::span<const std::size_t>(&first, 1), dtype);
  for (int i = 0; i < opts.warmup_runs; ++i) model.forward(one);
  std::vector<double> ms;
  for (int i = 0; i < opts.timing_runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto y = model.forward(one);
    (void)y.sum().item<double>();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(ms.begin(), ms.begin() + static_cast<std::ptrdiff_t>(ms.size() / 2), ms.end());
  report.inference_ms = ms[ms.size() / 2];
}

EvalOutcome evaluate_model(Predictor& model, const Dataset& ds, const std::string& name,
                           const CostOptions& opts) {
  auto out = evaluate_placements(ds, predict_all(model, ds), name);
  account_cost(model, ds, opts, out.report);
  return out;
}

EvalOutcome evaluate_online_pso(const Dataset& ds, const PsoConfig& cfg, int latency_steps,
                                const CostOptions& opts) {
  require(ds.size() > 0, ErrorKind::kInvalidArgument, "empty evaluation set");
  Placements preds;
  preds.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    PsoConfig local = cfg;
    local.seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(ds.windows[i].meta.trajectory_id),
                             static_cast<std::uint64_t>(ds.windows[i].meta.start));
    preds.push_back(online_pso_predict(ds, i, local, latency_steps));
  }
  auto out = evaluate_placements(ds, preds, "OnlinePSO");
  if (opts.timing_runs > 0) {
    std::vector<double> ms;
    const int runs = std::min<int>(opts.timing_runs, 10);
    for (int r = 0; r < runs; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)online_pso_predict(ds, static_cast<std::size_t>(r) % ds.size(), cfg, latency_steps);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(ms.begin(), ms.begin() + static_cast<std::ptrdiff_t>(ms.size() / 2), ms.end());
    out.report.inference_ms = ms[ms.size() / 2];
  }
  return out;
}

std::string reports_csv(const std::vector<metrics::MetricsReport>& reports) {
  std::ostringstream os;
  os << metrics::csv_header() << '\n';
  for (const auto& r : reports) os << metrics::csv_row(r) << '\n';
  return os.str();
}

}  // namespace mapp::learn
