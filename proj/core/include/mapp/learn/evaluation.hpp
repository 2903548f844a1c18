// SPDX-License-Identifier: Apache-2.0
//
// Test-set evaluation in double precision: secrecy re-evaluated from stored
// channels at predicted placements, NMSE against labels, and cost accounting.
#pragma once

#include <string>
#include <vector>

#include "mapp/dataset.hpp"
#include "mapp/learn/model.hpp"
#include "mapp/metrics.hpp"
#include "mapp/pso.hpp"

namespace mapp::learn {

struct EvalOutcome {
  metrics::MetricsReport report;
  /// Per-window F-step average secrecy rate.
  std::vector<double> window_asr;
};

/// One F x 3N placement list (meters) per window.
using Placements = std::vector<std::vector<double>>;

Placements predict_all(Predictor& model, const Dataset& ds, int batch_size = 256);

/// Antennas are clamped into their regions before the channels are
/// evaluated; everything else is taken as predicted.
EvalOutcome evaluate_placements(const Dataset& ds, const Placements& preds, const std::string& name);

/// Per-window F-step capacity pairs at the given placements.
std::vector<metrics::MrtCapacities> window_capacities(const Dataset& ds, std::size_t window,
                                                      std::span<const double> placement);

struct CostOptions {
  int timing_runs = 100;
  int warmup_runs = 10;
};

/// Fills param_count, flops and inference_ms (median single-sample forward).
void account_cost(Predictor& model, const Dataset& sample, const CostOptions& opts,
                  metrics::MetricsReport& report);

EvalOutcome evaluate_model(Predictor& model, const Dataset& ds, const std::string& name,
                           const CostOptions& opts = {});

EvalOutcome evaluate_online_pso(const Dataset& ds, const PsoConfig& cfg, int latency_steps,
                                const CostOptions& opts = {});

std::string reports_csv(const std::vector<metrics::MetricsReport>& reports);

}  // namespace mapp::learn
