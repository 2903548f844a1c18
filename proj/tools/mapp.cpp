// SPDX-License-Identifier: Apache-2.0
//
// mapp: dataset generation, labeling, training, evaluation and experiment
// sweeps for movable-antenna placement prediction.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mapp/dataset.hpp"
#include "mapp/error.hpp"
#include "mapp/learn/experiments.hpp"
#include "mapp/plots.hpp"
#include "mapp/pso.hpp"

#ifndef MAPP_VERSION
#define MAPP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace mapp;
using namespace mapp::learn;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 0;
};

struct Run {
  KeyValues kv;
  ExperimentConfig exp;
};

Run load_run(const Common& c) {
  Run r;
  if (!c.config.empty()) r.kv = KeyValues::load(c.config);
  r.exp = ExperimentConfig::from_kv(r.kv);
  const auto unused = r.kv.unused_keys();
  if (!unused.empty()) {
    std::string names;
    for (const auto& k : unused) names += (names.empty() ? "" : ", ") + k;
    fail(ErrorKind::kConfig, "unknown config keys: " + names);
  }
  r.exp.workers = c.workers;
  fs::create_directories(c.out);
  return r;
}

void write_or_throw(const fs::path& p, const std::string& text) {
  if (!plots::write_text(p, text)) fail(ErrorKind::kIo, "cannot write " + p.string());
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

void write_manifest(const Common& c, const std::string& command, const Run& run,
                    const nlohmann::json& extra = nlohmann::json::object()) {
  const fs::path root(c.out);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "run_manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& f : files) {
    outputs.push_back({{"path", fs::relative(f, root).generic_string()}, {"fnv1a64", file_hash(f)}});
  }
  nlohmann::json m = {{"command", command},
                      {"config_hash", hex64(run.kv.hash())},
                      {"config", run.kv.dump()},
                      {"seed", c.seed},
                      {"workers", c.workers},
                      {"version", MAPP_VERSION},
                      {"torch_version", TORCH_VERSION},
                      {"extra", extra},
                      {"outputs", outputs}};
  write_or_throw(root / "run_manifest.json", m.dump(2) + "\n");
}

PredictorPtr load_predictor(const fs::path& dir, std::string* name = nullptr) {
  const CheckpointInfo info = read_checkpoint_info(dir);
  PredictorPtr model = make_predictor(info.kind, ModelConfig::from_kv(info.model_config));
  load_checkpoint_state(*model, dir);
  model->eval();
  if (name) *name = info.extra.get_string("name", info.kind);
  return model;
}

std::vector<TrainedModel> load_predictors(const std::vector<std::string>& dirs, NormStats* stats) {
  std::vector<TrainedModel> out;
  for (const auto& d : dirs) {
    TrainedModel t;
    t.model = load_predictor(d, &t.name);
    if (stats && stats->empty()) *stats = read_checkpoint_info(d).stats;
    out.push_back(std::move(t));
  }
  return out;
}

// --- subcommands -------------------------------------------------------------

int cmd_generate(const Common& c) {
  Run run = load_run(c);
  const DatasetSplits splits = generate_splits(run.exp.plan, c.seed, c.workers);
  save_splits(splits, fs::path(c.out) / "dataset");
  Oracle oracle;
  std::vector<metrics::MetricsReport> rows;
  for (const auto* part : {&splits.train, &splits.valid, &splits.test}) {
    rows.push_back(evaluate_placements(*part, predict_all(oracle, *part), "labels").report);
  }
  std::ostringstream os;
  os << "split,windows,label_asr,label_spsc\n";
  const char* names[] = {"train", "valid", "test"};
  const Dataset* parts[] = {&splits.train, &splits.valid, &splits.test};
  for (int i = 0; i < 3; ++i) {
    os << names[i] << ',' << parts[i]->size() << ',' << format_double(rows[i].asr) << ','
       << format_double(rows[i].spsc) << '\n';
  }
  write_or_throw(fs::path(c.out) / "dataset_summary.csv", os.str());
  write_manifest(c, "generate", run);
  std::cout << "generated " << splits.train.size() << '/' << splits.valid.size() << '/'
            << splits.test.size() << " windows into " << (fs::path(c.out) / "dataset").string() << "\n";
  return 0;
}

int cmd_label(const Common& c) {
  Run run = load_run(c);
  const auto& plan = run.exp.plan;
  PsoConfig pso = plan.pso;
  pso.seed = stream_seed(c.seed, pso.seed, 0x6c6162);
  const int n = plan.n_trajectories;
  std::vector<std::string> chunks(static_cast<std::size_t>(n));
  const auto centers = region_centers(array_regions(plan.scenario));
  parallel_for(static_cast<std::size_t>(n), c.workers, [&](std::size_t t) {
    const auto snaps = build_snapshot_sequence(c.seed, plan.scenario, t);
    const auto labels = label_trajectory(snaps, plan.scenario, pso, t);
    std::ostringstream os;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto problem = SecrecyProblem::from_snapshot(snaps[i], plan.scenario);
      os << t << ',' << i << ',' << format_double(labels[i].secrecy_rate) << ','
         << format_double(problem.secrecy(centers)) << ',' << (labels[i].feasible ? 1 : 0);
      for (double v : labels[i].placement.yz()) os << ',' << format_double(v);
      os << '\n';
    }
    chunks[t] = os.str();
  });
  std::ostringstream os;
  os << "trajectory,step,label_secrecy,center_secrecy,feasible";
  for (int a = 0; a < plan.scenario.n_antennas(); ++a) os << ",y" << a << ",z" << a;
  os << '\n';
  for (const auto& ch : chunks) os << ch;
  write_or_throw(fs::path(c.out) / "labels.csv", os.str());
  write_manifest(c, "label", run);
  return 0;
}

int cmd_train(const Common& c, const std::string& data, const std::string& kind, const std::string& name) {
  Run run = load_run(c);
  torch::set_num_threads(std::max(1, run.exp.train.threads));
  const DatasetSplits splits = load_splits(data);
  const std::string label = name.empty() ? kind : name;
  TrainedModel t = train_predictor(kind, label, run.exp.model, run.exp.train, splits, c.seed);
  const fs::path out(c.out);
  KeyValues extra;
  extra.set("name", label);
  extra.set("seed", static_cast<std::int64_t>(c.seed));
  extra.set("best_epoch", t.fit.best_epoch);
  extra.set("harness_hash", hex64(t.fit.harness_hash));
  save_checkpoint(*t.model, t.model_config, splits.train.stats, extra, out / "checkpoint");
  emit_training_report(out, label, t.fit);
  write_manifest(c, "train", run, {{"model", kind}, {"best_epoch", t.fit.best_epoch}});
  std::cout << "trained " << label << " best_epoch=" << t.fit.best_epoch
            << " best_objective=" << format_double(t.fit.best_objective) << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& data, const std::vector<std::string>& ckpts,
                 const std::vector<std::string>& baselines, int timing_runs) {
  Run run = load_run(c);
  CostOptions cost = run.exp.cost;
  if (timing_runs >= 0) cost.timing_runs = timing_runs;
  const Dataset test = load_splits(data).test;
  require(test.size() > 0, ErrorKind::kInvalidArgument, "empty test set");
  std::vector<metrics::MetricsReport> reports;
  for (const auto& d : ckpts) {
    std::string name;
    auto m = load_predictor(d, &name);
    reports.push_back(evaluate_model(*m, test, name, cost).report);
  }
  const ModelConfig cfg = fit_to_dataset(run.exp.model, test);
  for (const auto& b : baselines) {
    if (b == "HoldLast") {
      HoldLast h(cfg);
      reports.push_back(evaluate_model(h, test, b, cost).report);
    } else if (b == "Oracle") {
      Oracle o;
      reports.push_back(evaluate_model(o, test, b, cost).report);
    } else if (b == "OnlinePSO") {
      reports.push_back(evaluate_online_pso(test, run.exp.online_pso, run.exp.latency_steps, cost).report);
    } else {
      fail(ErrorKind::kInvalidArgument, "unknown rule-based baseline: " + b);
    }
  }
  require(!reports.empty(), ErrorKind::kInvalidArgument, "nothing to evaluate");
  emit_overall_report(c.out, "overall", reports);
  write_manifest(c, "evaluate", run);
  std::cout << reports_csv(reports);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& experiment, const std::vector<std::string>& ckpts) {
  Run run = load_run(c);
  torch::set_num_threads(std::max(1, run.exp.train.threads));
  if (experiment == "generalization") {
    const auto reports = run_generalization(run.exp, c.seed);
    emit_overall_report(c.out, "generalization", reports);
    std::cout << reports_csv(reports);
  } else {
    NormStats stats;
    const auto models = load_predictors(ckpts, &stats);
    require(!models.empty(), ErrorKind::kInvalidArgument, "sweeps need at least one --checkpoints entry");
    if (experiment == "speed") {
      const auto rows = sweep_speed(models, run.exp, c.seed, stats);
      emit_sweep_report(c.out, "speed_sweep", "speed_kmh", rows);
      std::cout << sweep_csv("speed_kmh", rows);
    } else if (experiment == "noise") {
      const auto rows = sweep_noise(models, run.exp, c.seed, stats);
      emit_sweep_report(c.out, "noise_sweep", "noise_db", rows);
      std::cout << sweep_csv("noise_db", rows);
    } else {
      fail(ErrorKind::kInvalidArgument, "unknown sweep: " + experiment);
    }
  }
  write_manifest(c, "sweep", run, {{"experiment", experiment}});
  return 0;
}

int cmd_ablate(const Common& c, const std::string& data) {
  Run run = load_run(c);
  torch::set_num_threads(std::max(1, run.exp.train.threads));
  const DatasetSplits splits = load_splits(data);
  const auto reports = run_ablation(splits, run.exp, c.seed);
  emit_overall_report(c.out, "ablation", reports);
  write_manifest(c, "ablate", run);
  std::cout << reports_csv(reports);
  return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& runs) {
  Run run = load_run(c);
  std::ostringstream md;
  md << "# mapp report\n";
  for (const auto& r : runs) {
    std::vector<fs::path> csvs;
    for (const auto& e : fs::recursive_directory_iterator(r)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
    }
    std::sort(csvs.begin(), csvs.end());
    md << "\n## " << fs::path(r).filename().string() << "\n";
    for (const auto& f : csvs) {
      if (f.filename().string().find("_steps") != std::string::npos) continue;
      std::ifstream in(f);
      md << "\n### " << fs::relative(f, r).generic_string() << "\n\n```\n" << in.rdbuf() << "```\n";
    }
  }
  write_or_throw(fs::path(c.out) / "report.md", md.str());
  write_manifest(c, "report", run);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--out", c.out, "output directory")->required();
  sub->add_option("--workers", c.workers, "worker threads, 0 for all cores");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movable-antenna placement prediction toolkit"};
  app.require_subcommand(1);
  Common common;
  std::string data, model = "RoleAware", name, experiment;
  std::vector<std::string> ckpts, baselines, runs;
  int timing_runs = -1;

  auto* gen = app.add_subcommand("generate", "simulate, label and window a dataset");
  add_common(gen, common);
  auto* lab = app.add_subcommand("label", "label trajectories and compare with static placement");
  add_common(lab, common);
  auto* tr = app.add_subcommand("train", "train one predictor");
  add_common(tr, common);
  tr->add_option("--data", data, "dataset directory from generate")->required();
  tr->add_option("--model", model, "RoleAware, VanillaTransformer, RNN, GRU, LSTM or CNN_LSTM");
  tr->add_option("--name", name, "report name for the trained model");
  auto* ev = app.add_subcommand("evaluate", "evaluate checkpoints and rule-based baselines");
  add_common(ev, common);
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--checkpoints", ckpts, "checkpoint directories");
  ev->add_option("--baselines", baselines, "HoldLast, Oracle and/or OnlinePSO");
  ev->add_option("--timing-runs", timing_runs, "forward passes timed per model, 0 disables timing");
  auto* sw = app.add_subcommand("sweep", "speed, noise or generalization experiment");
  add_common(sw, common);
  sw->add_option("--experiment", experiment, "speed, noise or generalization")->required();
  sw->add_option("--checkpoints", ckpts, "checkpoint directories");
  auto* ab = app.add_subcommand("ablate", "train and compare the ablation variants");
  add_common(ab, common);
  ab->add_option("--data", data, "dataset directory")->required();
  auto* rep = app.add_subcommand("report", "collect CSV outputs of earlier runs into one document");
  add_common(rep, common);
  rep->add_option("--runs", runs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << "error kind=usage message=\"" << e.what() << "\"\n";
    return code;
  }

  try {
    if (*gen) return cmd_generate(common);
    if (*lab) return cmd_label(common);
    if (*tr) return cmd_train(common, data, model, name);
    if (*ev) return cmd_evaluate(common, data, ckpts, baselines, timing_runs);
    if (*sw) return cmd_sweep(common, experiment, ckpts);
    if (*ab) return cmd_ablate(common, data);
    if (*rep) return cmd_report(common, runs);
  } catch (const Error& e) {
    std::cerr << "error kind=" << to_string(e.kind()) << " message=\"" << e.what() << "\"\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal message=\"" << e.what() << "\"\n";
    return 3;
  }
  return 1;
}
