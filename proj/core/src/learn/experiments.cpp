// SPDX-License-Identifier: Apache-2.0
#include "mapp/learn/experiments.hpp"

#include <iostream>
#include <map>
#include <sstream>

#include "mapp/error.hpp"
#include "mapp/plots.hpp"

namespace mapp::learn {

namespace {

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '[' || c == ']') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KeyValues& kv) {
  ExperimentConfig e;
  e.plan = GenerationPlan::from_kv(kv);
  e.model = ModelConfig::from_kv(kv);
  e.train = TrainConfig::from_kv(kv);
  e.online_pso = e.plan.pso;
  e.latency_steps = static_cast<int>(kv.get_int("latency_steps", e.latency_steps));
  if (e.latency_steps < 0) fail(ErrorKind::kConfig, "latency_steps must be non-negative");
  e.speeds_kmh = kv.get_doubles("sweep_speeds_kmh", e.speeds_kmh);
  e.noise_db = kv.get_doubles("sweep_noise_db", e.noise_db);
  if (e.speeds_kmh.empty() || e.noise_db.empty()) fail(ErrorKind::kConfig, "sweep grids must be nonempty");
  e.generalization_t_in = static_cast<int>(kv.get_int("generalization_t_in", e.generalization_t_in));
  e.generalization_f_out = static_cast<int>(kv.get_int("generalization_f_out", e.generalization_f_out));
  e.models = split_names(kv.get_string("models", join(e.models)));
  if (e.models.empty()) fail(ErrorKind::kConfig, "models list must be nonempty");
  e.cost.timing_runs = static_cast<int>(kv.get_int("timing_runs", e.cost.timing_runs));
  return e;
}

ModelConfig fit_to_dataset(ModelConfig cfg, const Dataset& ds) {
  cfg.t_in = ds.shape.t_in;
  cfg.f_out = ds.shape.f_out;
  cfg.n_t = ds.n_antennas();
  cfg.validate();
  return cfg;
}

PredictorPtr build_predictor(const std::string& kind, const ModelConfig& cfg, std::uint64_t seed) {
  torch::manual_seed(seed);
  return make_predictor(kind, cfg);
}

TrainedModel train_predictor(const std::string& kind, const std::string& name, const ModelConfig& model_cfg,
                             TrainConfig train, const DatasetSplits& splits, std::uint64_t seed) {
  const ModelConfig cfg = fit_to_dataset(model_cfg, splits.train);
  if (kind != "RoleAware") train.loss_mode = LossMode::kNmseOnly;
  train.seed = seed;
  TrainedModel out;
  out.name = name;
  out.model = build_predictor(kind, cfg, seed);
  cfg.to_kv(out.model_config);
  out.fit = fit(*out.model, splits.train, splits.valid, train);
  return out;
}

Dataset regenerate_test_set(const GenerationPlan& plan, std::uint64_t seed, const NormStats& stats,
                            int workers) {
  std::vector<std::int64_t> ids(static_cast<std::size_t>(plan.n_trajectories));
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  const auto parts = split_trajectory_ids(ids, plan.split_ratios, seed);
  Dataset ds = generate_dataset(plan, seed, workers, parts[2]);
  ds.stats = stats;
  return ds;
}

namespace {

std::vector<SweepRow> evaluate_condition(const std::vector<TrainedModel>& models, const Dataset& test,
                                         double x, const ModelConfig& base) {
  std::vector<SweepRow> rows;
  const CostOptions no_timing{0, 0};
  for (const auto& m : models) {
    rows.push_back({x, evaluate_model(*m.model, test, m.name, no_timing).report});
  }
  const ModelConfig cfg = fit_to_dataset(base, test);
  HoldLast hold(cfg);
  rows.push_back({x, evaluate_model(hold, test, "HoldLast", no_timing).report});
  Oracle oracle;
  rows.push_back({x, evaluate_model(oracle, test, "Oracle", no_timing).report});
  return rows;
}

}  // namespace

std::vector<SweepRow> sweep_speed(const std::vector<TrainedModel>& models, const ExperimentConfig& exp,
                                  std::uint64_t seed, const NormStats& stats) {
  std::vector<SweepRow> rows;
  for (double s : exp.speeds_kmh) {
    GenerationPlan plan = exp.plan;
    plan.scenario.speed_kmh_min = s;
    plan.scenario.speed_kmh_max = s;
    plan.scenario.validate();
    const Dataset test = regenerate_test_set(plan, seed, stats, exp.workers);
    auto part = evaluate_condition(models, test, s, exp.model);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<SweepRow> sweep_noise(const std::vector<TrainedModel>& models, const ExperimentConfig& exp,
                                  std::uint64_t seed, const NormStats& stats) {
  std::vector<SweepRow> rows;
  for (double db : exp.noise_db) {
    GenerationPlan plan = exp.plan;
    plan.scenario.noise_power_db = db;
    plan.scenario.validate();
    const Dataset test = regenerate_test_set(plan, seed, stats, exp.workers);
    auto part = evaluate_condition(models, test, db, exp.model);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<metrics::MetricsReport> run_ablation(const DatasetSplits& splits, const ExperimentConfig& exp,
                                                 std::uint64_t seed) {
  struct Variant {
    std::string name;
    bool role_aware;
    bool semantic;
    LossMode mode;
  };
  const Variant variants[] = {{"full", true, true, LossMode::kComposite},
                              {"without_role_awareness", false, true, LossMode::kComposite},
                              {"without_semantics", true, false, LossMode::kComposite},
                              {"without_composite_loss", true, true, LossMode::kNmseOnly}};
  std::vector<metrics::MetricsReport> out;
  for (const auto& v : variants) {
    ModelConfig cfg = exp.model;
    cfg.role_aware = v.role_aware;
    cfg.semantic = v.semantic;
    TrainConfig train = exp.train;
    train.loss_mode = v.mode;
    auto trained = train_predictor("RoleAware", v.name, cfg, train, splits, seed);
    out.push_back(evaluate_model(*trained.model, splits.test, v.name, exp.cost).report);
  }
  return out;
}

std::vector<metrics::MetricsReport> run_generalization(const ExperimentConfig& exp, std::uint64_t seed) {
  GenerationPlan plan = exp.plan;
  plan.shape.t_in = exp.generalization_t_in;
  plan.shape.f_out = exp.generalization_f_out;
  plan.shape.validate();
  if (plan.scenario.snapshots_per_trajectory < plan.shape.span()) {
    fail(ErrorKind::kConfig, "trajectories are too short for the generalization window");
  }
  const DatasetSplits splits = generate_splits(plan, seed, exp.workers);
  std::vector<metrics::MetricsReport> out;
  for (const auto& kind : exp.models) {
    auto trained = train_predictor(kind, kind, exp.model, exp.train, splits, seed);
    out.push_back(evaluate_model(*trained.model, splits.test, kind, exp.cost).report);
  }
  HoldLast hold(fit_to_dataset(exp.model, splits.test));
  out.push_back(evaluate_model(hold, splits.test, "HoldLast", exp.cost).report);
  return out;
}

std::string sweep_csv(const std::string& x_name, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << x_name << ',' << metrics::csv_header() << '\n';
  for (const auto& r : rows) os << format_double(r.x) << ',' << metrics::csv_row(r.report) << '\n';
  return os.str();
}

namespace {

void warn_if(bool ok, const std::filesystem::path& p) {
  if (!ok) std::cerr << "warning: could not write plot " << p.string() << "\n";
}

}  // namespace

void emit_sweep_report(const std::filesystem::path& dir, const std::string& experiment,
                       const std::string& x_name, const std::vector<SweepRow>& rows) {
  std::filesystem::create_directories(dir);
  if (!plots::write_text(dir / (experiment + ".csv"), sweep_csv(x_name, rows))) {
    fail(ErrorKind::kIo, "cannot write " + (dir / (experiment + ".csv")).string());
  }
  std::vector<std::string> order;
  std::map<std::string, plots::Series> asr, spsc;
  for (const auto& r : rows) {
    if (!asr.count(r.report.model)) order.push_back(r.report.model);
    auto& a = asr[r.report.model];
    auto& s = spsc[r.report.model];
    a.name = s.name = r.report.model;
    a.x.push_back(r.x);
    a.y.push_back(r.report.asr);
    s.x.push_back(r.x);
    s.y.push_back(r.report.spsc);
  }
  std::vector<plots::Series> va, vs;
  for (const auto& m : order) {
    va.push_back(asr[m]);
    vs.push_back(spsc[m]);
  }
  const auto pa = dir / (experiment + "_asr.svg");
  const auto ps = dir / (experiment + "_spsc.svg");
  warn_if(plots::write_text(pa, plots::line_chart({"ASR vs " + x_name, x_name, "ASR (bps/Hz)"}, va)), pa);
  warn_if(plots::write_text(ps, plots::line_chart({"SPSC vs " + x_name, x_name, "SPSC"}, vs)), ps);
}

void emit_overall_report(const std::filesystem::path& dir, const std::string& experiment,
                         const std::vector<metrics::MetricsReport>& reports) {
  std::filesystem::create_directories(dir);
  if (!plots::write_text(dir / (experiment + ".csv"), reports_csv(reports))) {
    fail(ErrorKind::kIo, "cannot write " + (dir / (experiment + ".csv")).string());
  }
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (const auto& r : reports) {
    rows.push_back({r.model, {r.asr, r.spsc, r.nmse, static_cast<double>(r.param_count),
                              static_cast<double>(r.flops), r.inference_ms}});
  }
  const auto p = dir / (experiment + "_radar.svg");
  warn_if(plots::write_text(p, plots::radar_chart(experiment, {"ASR", "SPSC", "NMSE", "Params", "FLOPs", "ms"}, rows)), p);
}

void emit_training_report(const std::filesystem::path& dir, const std::string& name, const FitResult& fit) {
  std::filesystem::create_directories(dir);
  if (!plots::write_text(dir / (name + "_curves.csv"), curves_csv(fit)) ||
      !plots::write_text(dir / (name + "_steps.csv"), steps_csv(fit))) {
    fail(ErrorKind::kIo, "cannot write training curves under " + dir.string());
  }
  plots::Series total{"L_total", {}, {}}, nmse{"L_NMSE", {}, {}}, sec{"L_secrecy", {}, {}}, st{"L_st", {}, {}};
  plots::Series asr{"valid ASR", {}, {}}, spsc{"valid SPSC", {}, {}};
  for (const auto& c : fit.curves) {
    const double e = c.epoch;
    total.x.push_back(e), total.y.push_back(c.total);
    nmse.x.push_back(e), nmse.y.push_back(c.nmse);
    sec.x.push_back(e), sec.y.push_back(c.secrecy);
    st.x.push_back(e), st.y.push_back(c.constraint);
    asr.x.push_back(e), asr.y.push_back(c.valid_asr);
    spsc.x.push_back(e), spsc.y.push_back(c.valid_spsc);
  }
  const auto pl = dir / (name + "_loss.svg");
  warn_if(plots::write_text(pl, plots::panel_grid({{{"Composite loss", "epoch", "loss"}, {total}},
                                                   {{"NMSE loss", "epoch", "loss"}, {nmse}},
                                                   {{"Secrecy loss", "epoch", "loss"}, {sec}},
                                                   {{"Constraint loss", "epoch", "loss"}, {st}}},
                                                  2)),
          pl);
  const auto pm = dir / (name + "_secrecy.svg");
  warn_if(plots::write_text(pm, plots::panel_grid({{{"Validation ASR", "epoch", "bps/Hz"}, {asr}},
                                                   {{"Validation SPSC", "epoch", "fraction"}, {spsc}}},
                                                  2)),
          pm);
}

}  // namespace mapp::learn
