// SPDX-License-Identifier: Apache-2.0
//
// Supervised windows built from labeled trajectories, grouped z-score
// statistics, trajectory-level splits and the on-disk dataset format.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mapp/channel.hpp"
#include "mapp/config.hpp"
#include "mapp/pso.hpp"
#include "mapp/scenario.hpp"

namespace mapp {

enum class Stream { kBobPos, kEvePos, kBobCsi, kEveCsi, kMaPos };
inline constexpr std::size_t kNumStreams = 5;
inline constexpr std::array<const char*, kNumStreams> kStreamNames = {
    "bob_pos", "eve_pos", "bob_csi", "eve_csi", "ma_pos"};

struct WindowShape {
  int t_in = 16;
  int f_out = 4;
  int stride = 1;

  int span() const { return t_in + f_out; }
  void validate() const;
  static WindowShape from_kv(const KeyValues& kv);
  void to_kv(KeyValues& kv) const;
  /// Width of one time step of `s` for an array of `n_antennas`.
  static int width(Stream s, int n_antennas);
};

struct WindowMeta {
  std::int64_t trajectory_id = 0;
  std::int64_t start = 0;
  double bob_speed_mps = 0.0;
  double eve_speed_mps = 0.0;

  friend bool operator==(const WindowMeta&, const WindowMeta&) = default;
};

/// Row-major float tensors; all positions in meters, CSI as interleaved
/// (real, imag).
struct SampleWindow {
  std::vector<float> bob_pos;  // T x 3
  std::vector<float> eve_pos;  // T x 3
  std::vector<float> bob_csi;  // T x 2N
  std::vector<float> eve_csi;  // T x 2N
  std::vector<float> ma_pos;   // T x 3N
  std::vector<float> target;   // F x 3N
  WindowMeta meta;

  std::vector<float>& stream(Stream s);
  const std::vector<float>& stream(Stream s) const;
  friend bool operator==(const SampleWindow&, const SampleWindow&) = default;
};

/// Resolved channels for every step of a window (T history then F future),
/// kept in double precision for secrecy re-evaluation.
struct WindowPhysics {
  std::vector<SpatialChannel> bob;
  std::vector<SpatialChannel> eve;
  std::vector<double> noise_power;
};

struct NormStats {
  std::array<std::vector<double>, kNumStreams> mean;
  std::array<std::vector<double>, kNumStreams> stddev;
  std::array<std::vector<std::uint8_t>, kNumStreams> floored;

  static constexpr double kStdFloor = 1e-8;

  bool empty() const { return mean[0].empty(); }
  std::size_t floored_count() const;
  /// z-score in place; `values` holds whole time steps of stream `s`.
  void apply(Stream s, std::span<double> values) const;
  void invert(Stream s, std::span<double> values) const;
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// JSON text form used inside dataset and checkpoint manifests ("null" when
/// empty).
std::string norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const std::string& text);

NormStats fit_norm_stats(const std::vector<SampleWindow>& train);
SampleWindow normalize(const SampleWindow& window, const NormStats& stats);
/// Normalized F x 3N placements back to meters (x column forced to 0).
std::vector<double> denormalize_positions(std::span<const double> pred, const NormStats& stats);

/// Builds sliding windows over one labeled trajectory. Returns an empty list
/// (and bumps `skipped`) when the trajectory is shorter than T + F.
struct WindowBatch {
  std::vector<SampleWindow> windows;
  std::vector<WindowPhysics> physics;
};
WindowBatch build_windows(const std::vector<Snapshot>& snapshots,
                          const std::vector<LabelRecord>& labels, const ScenarioConfig& scenario,
                          const WindowShape& shape, std::uint64_t trajectory_id,
                          std::uint64_t seed, std::size_t* skipped = nullptr);

/// Per-step semantic features from raw window values:
/// [d_b, d_e, az_b, el_b, az_e, el_e, v_b, v_e, C_b, C_e, [C_b - C_e]^+].
inline constexpr int kNumSemantic = 11;
std::vector<double> semantic_features(const SampleWindow& window, const ScenarioConfig& scenario,
                                      int t_in, double noise_power);

struct Dataset {
  KeyValues config;
  ScenarioConfig scenario;
  WindowShape shape;
  std::uint64_t seed = 0;
  std::vector<SampleWindow> windows;
  std::vector<WindowPhysics> physics;
  NormStats stats;

  std::size_t size() const { return windows.size(); }
  int n_antennas() const { return scenario.n_antennas(); }
};

struct DatasetSplits {
  Dataset train;
  Dataset valid;
  Dataset test;
};

/// Seeded shuffle of `ids` cut into train/valid/test id lists.
std::array<std::vector<std::int64_t>, 3> split_trajectory_ids(std::vector<std::int64_t> ids,
                                                              std::array<double, 3> ratios,
                                                              std::uint64_t seed);

/// Partitions by trajectory id using a seeded shuffle of the ids.
DatasetSplits split_dataset(const Dataset& all, std::array<double, 3> ratios, std::uint64_t seed);

struct GenerationPlan {
  ScenarioConfig scenario;
  PsoConfig pso;
  WindowShape shape;
  int n_trajectories = 100;
  std::array<double, 3> split_ratios{0.70, 0.15, 0.15};

  static GenerationPlan from_kv(const KeyValues& kv);
  /// Canonical key set stored in dataset manifests.
  KeyValues to_kv() const;
};

/// Generates, labels and windows the given trajectory ids (all of them when
/// `ids` is empty) in parallel; `workers` 0 means hardware concurrency.
/// Stats are left empty.
Dataset generate_dataset(const GenerationPlan& plan, std::uint64_t seed, int workers = 0,
                         std::vector<std::int64_t> ids = {}, std::size_t* skipped = nullptr);

/// Full pipeline: generate, split, fit stats on the training split.
DatasetSplits generate_splits(const GenerationPlan& plan, std::uint64_t seed, int workers = 0);

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
/// Throws kCorruptDataset on any manifest, shape or content-hash mismatch.
Dataset load_dataset(const std::filesystem::path& dir);

void save_splits(const DatasetSplits& splits, const std::filesystem::path& dir);
DatasetSplits load_splits(const std::filesystem::path& dir);

/// Evaluates `fn(i)` for i in [0, n) over `workers` threads; results are
/// written by index so ordering never depends on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace mapp
