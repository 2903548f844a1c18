// SPDX-License-Identifier: Apache-2.0
#include "mapp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mapp/config.hpp"
#include "mapp/error.hpp"

namespace mapp::metrics {

double asr(std::span<const double> cb, std::span<const double> ce) {
  require(cb.size() == ce.size(), ErrorKind::kInvalidArgument, "asr: length mismatch");
  require(!cb.empty(), ErrorKind::kInvalidArgument, "asr: empty horizon");
  double sum = 0.0;
  for (std::size_t t = 0; t < cb.size(); ++t) sum += std::max(cb[t] - ce[t], 0.0);
  return sum / static_cast<double>(cb.size());
}

double spsc(std::span<const double> window_rates) {
  require(!window_rates.empty(), ErrorKind::kInvalidArgument, "spsc: no windows");
  std::size_t positive = 0;
  for (double r : window_rates) positive += r > 0.0 ? 1 : 0;
  return static_cast<double>(positive) / static_cast<double>(window_rates.size());
}

double nmse(std::span<const double> target, std::span<const double> pred) {
  require(target.size() == pred.size(), ErrorKind::kInvalidArgument, "nmse: shape mismatch");
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = target[i] - pred[i];
    err += d * d;
    ref += target[i] * target[i];
  }
  require(ref > 0.0, ErrorKind::kInvalidArgument, "nmse: zero-norm target");
  return err / ref;
}

double mean_nmse(std::span<const double> targets, std::span<const double> preds,
                 std::size_t count) {
  require(count > 0 && targets.size() == preds.size() && targets.size() % count == 0,
          ErrorKind::kInvalidArgument, "mean_nmse: shape mismatch");
  const std::size_t stride = targets.size() / count;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    sum += nmse(targets.subspan(i * stride, stride), preds.subspan(i * stride, stride));
  }
  return sum / static_cast<double>(count);
}

MrtCapacities mrt_capacities(std::span<const cdouble> h_bob, std::span<const cdouble> h_eve,
                             double noise_power, double p_max) {
  const Beamformer w = mrt_beamformer(h_bob, p_max);
  return {capacity(h_bob, w, noise_power), capacity(h_eve, w, noise_power)};
}

double secrecy_rate(std::span<const cdouble> h_bob, std::span<const cdouble> h_eve,
                    double noise_power, double p_max) {
  const auto c = mrt_capacities(h_bob, h_eve, noise_power, p_max);
  return std::max(c.bob - c.eve, 0.0);
}

std::string csv_header() { return "model,asr_bps_hz,spsc,nmse,parameters,flops,inference_ms"; }

std::string csv_row(const MetricsReport& r) {
  return r.model + "," + format_double(r.asr) + "," + format_double(r.spsc) + "," +
         format_double(r.nmse) + "," + std::to_string(r.param_count) + "," +
         std::to_string(r.flops) + "," + format_double(r.inference_ms);
}

}  // namespace mapp::metrics
