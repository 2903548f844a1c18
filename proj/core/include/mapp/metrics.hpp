// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "mapp/channel.hpp"

namespace mapp::metrics {

struct MetricsReport {
  std::string model;
  double asr = 0.0;
  double spsc = 0.0;
  double nmse = 0.0;
  std::int64_t param_count = 0;
  std::int64_t flops = 0;
  double inference_ms = 0.0;
};

/// Average over the horizon of the clamped capacity gap [cb - ce]^+.
double asr(std::span<const double> cb, std::span<const double> ce);

/// Fraction of windows whose average secrecy rate is strictly positive.
double spsc(std::span<const double> window_rates);

/// ||target - pred||_F^2 / ||target||_F^2 for one sample.
double nmse(std::span<const double> target, std::span<const double> pred);
/// Batch mean of the per-sample ratio; both spans hold `count` samples
/// back to back.
double mean_nmse(std::span<const double> targets, std::span<const double> preds,
                 std::size_t count);

struct MrtCapacities {
  double bob = 0.0;
  double eve = 0.0;
};

/// Bob and Eve capacities when the transmitter beams toward Bob at full power.
MrtCapacities mrt_capacities(std::span<const cdouble> h_bob, std::span<const cdouble> h_eve,
                             double noise_power, double p_max);
double secrecy_rate(std::span<const cdouble> h_bob, std::span<const cdouble> h_eve,
                    double noise_power, double p_max);

std::string csv_header();
std::string csv_row(const MetricsReport& report);

}  // namespace mapp::metrics
