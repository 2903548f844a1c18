// SPDX-License-Identifier: Apache-2.0
//
// Experiment grid: model training by name, per-condition regenerated test
// sets (speed and noise sweeps), ablation variants, longer-horizon
// generalization and report emission.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mapp/dataset.hpp"
#include "mapp/learn/baselines.hpp"
#include "mapp/learn/evaluation.hpp"
#include "mapp/learn/training.hpp"

namespace mapp::learn {

struct ExperimentConfig {
  GenerationPlan plan;
  ModelConfig model;
  TrainConfig train;
  /// Solver settings and staleness for the online PSO baseline.
  PsoConfig online_pso;
  int latency_steps = 1;
  std::vector<double> speeds_kmh{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<double> noise_db{0, 5, 10, 15, 20, 25};
  int generalization_t_in = 10;
  int generalization_f_out = 10;
  std::vector<std::string> models{"RoleAware", "VanillaTransformer", "RNN", "GRU", "LSTM", "CNN_LSTM"};
  int workers = 0;
  CostOptions cost;

  static ExperimentConfig from_kv(const KeyValues& kv);
};

/// Model configuration with window and array sizes taken from `ds`.
ModelConfig fit_to_dataset(ModelConfig cfg, const Dataset& ds);

/// Seeds torch and constructs the predictor.
PredictorPtr build_predictor(const std::string& kind, const ModelConfig& cfg, std::uint64_t seed);

struct TrainedModel {
  std::string name;
  PredictorPtr model;
  FitResult fit;
  KeyValues model_config;
};

/// Trains `kind`. Every baseline uses NMSE-only weights; "RoleAware" uses the
/// configured loss mode.
TrainedModel train_predictor(const std::string& kind, const std::string& name, const ModelConfig& cfg,
                             TrainConfig train, const DatasetSplits& splits, std::uint64_t seed);

/// Regenerates only the test-split trajectories under `plan`, carrying
/// `stats` for normalization.
Dataset regenerate_test_set(const GenerationPlan& plan, std::uint64_t seed, const NormStats& stats,
                            int workers);

struct SweepRow {
  double x = 0.0;
  metrics::MetricsReport report;
};

/// One row per (condition, model). Learned models are evaluated as trained;
/// HoldLast and Oracle rows are always included.
std::vector<SweepRow> sweep_speed(const std::vector<TrainedModel>& models, const ExperimentConfig& exp,
                                  std::uint64_t seed, const NormStats& stats);
std::vector<SweepRow> sweep_noise(const std::vector<TrainedModel>& models, const ExperimentConfig& exp,
                                  std::uint64_t seed, const NormStats& stats);

/// Full model and the three ablations trained identically.
std::vector<metrics::MetricsReport> run_ablation(const DatasetSplits& splits, const ExperimentConfig& exp,
                                                 std::uint64_t seed);

/// Regenerates with the generalization window shape and trains every model.
std::vector<metrics::MetricsReport> run_generalization(const ExperimentConfig& exp, std::uint64_t seed);

std::string sweep_csv(const std::string& x_name, const std::vector<SweepRow>& rows);

/// Writes `<experiment>_<metric>.svg` line charts plus the CSV. Plot
/// failures only produce a warning on stderr.
void emit_sweep_report(const std::filesystem::path& dir, const std::string& experiment,
                       const std::string& x_name, const std::vector<SweepRow>& rows);
void emit_overall_report(const std::filesystem::path& dir, const std::string& experiment,
                         const std::vector<metrics::MetricsReport>& reports);
void emit_training_report(const std::filesystem::path& dir, const std::string& name, const FitResult& fit);

}  // namespace mapp::learn
