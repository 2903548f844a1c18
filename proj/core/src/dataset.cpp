// SPDX-License-Identifier: Apache-2.0
#include "mapp/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "mapp/error.hpp"

namespace mapp {

static_assert(std::endian::native == std::endian::little,
              "dataset files are raw little-endian; big-endian hosts are unsupported");

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;
constexpr const char* kManifestName = "manifest.json";

std::size_t idx(Stream s) { return static_cast<std::size_t>(s); }

void append_position(std::vector<float>& out, Vec3 p) {
  out.push_back(static_cast<float>(p.x));
  out.push_back(static_cast<float>(p.y));
  out.push_back(static_cast<float>(p.z));
}

void append_placement(std::vector<float>& out, const MAPlacement& pl) {
  for (double v : pl.rows()) out.push_back(static_cast<float>(v));
}

}  // namespace

// ---------------------------------------------------------------------------
// Shapes and windows

int WindowShape::width(Stream s, int n_antennas) {
  switch (s) {
    case Stream::kBobPos:
    case Stream::kEvePos:
      return 3;
    case Stream::kBobCsi:
    case Stream::kEveCsi:
      return 2 * n_antennas;
    case Stream::kMaPos:
      return 3 * n_antennas;
  }
  return 0;
}

void WindowShape::validate() const {
  if (t_in < 2) fail(ErrorKind::kConfig, "t_in must be at least 2");
  if (f_out < 1) fail(ErrorKind::kConfig, "f_out must be positive");
  if (stride < 1) fail(ErrorKind::kConfig, "stride must be positive");
}

WindowShape WindowShape::from_kv(const KeyValues& kv) {
  WindowShape s;
  s.t_in = static_cast<int>(kv.get_int("t_in", s.t_in));
  s.f_out = static_cast<int>(kv.get_int("f_out", s.f_out));
  s.stride = static_cast<int>(kv.get_int("window_stride", s.stride));
  s.validate();
  return s;
}

void WindowShape::to_kv(KeyValues& kv) const {
  kv.set("t_in", t_in);
  kv.set("f_out", f_out);
  kv.set("window_stride", stride);
}

std::vector<float>& SampleWindow::stream(Stream s) {
  switch (s) {
    case Stream::kBobPos: return bob_pos;
    case Stream::kEvePos: return eve_pos;
    case Stream::kBobCsi: return bob_csi;
    case Stream::kEveCsi: return eve_csi;
    case Stream::kMaPos: return ma_pos;
  }
  fail(ErrorKind::kInvalidArgument, "unknown stream");
}

const std::vector<float>& SampleWindow::stream(Stream s) const {
  return const_cast<SampleWindow*>(this)->stream(s);
}

WindowBatch build_windows(const std::vector<Snapshot>& snapshots,
                          const std::vector<LabelRecord>& labels, const ScenarioConfig& scenario,
                          const WindowShape& shape, std::uint64_t trajectory_id,
                          std::uint64_t seed, std::size_t* skipped) {
  shape.validate();
  require(snapshots.size() == labels.size(), ErrorKind::kInvalidArgument,
          "one label per snapshot is required");
  WindowBatch out;
  const auto n = snapshots.size();
  const auto span = static_cast<std::size_t>(shape.span());
  if (n < span) {
    if (skipped) ++*skipped;
    return out;
  }
  const double lambda = scenario.lambda_m();

  // Per-step resolved channels and the CSI observed at the label placement.
  std::vector<SpatialChannel> bob_ch(n), eve_ch(n);
  std::vector<CVector> bob_csi(n), eve_csi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Snapshot& s = snapshots[i];
    bob_ch[i] = SpatialChannel::resolve(s.bob_paths, s.t, lambda, scenario.f_hz);
    eve_ch[i] = SpatialChannel::resolve(s.eve_paths, s.t, lambda, scenario.f_hz);
    bob_csi[i] = bob_ch[i].evaluate(labels[i].placement);
    eve_csi[i] = eve_ch[i].evaluate(labels[i].placement);
    if (scenario.csi_error_var > 0.0) {
      std::mt19937_64 rng(stream_seed(seed, trajectory_id, 3, i));
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (CVector* h : {&bob_csi[i], &eve_csi[i]}) {
        double energy = 0.0;
        for (const auto& c : *h) energy += std::norm(c);
        const double sd =
            std::sqrt(0.5 * scenario.csi_error_var * energy / static_cast<double>(h->size()));
        for (auto& c : *h) {
          const double re = gauss(rng);
          const double im = gauss(rng);
          c += sd * cdouble{re, im};
        }
      }
    }
  }

  for (std::size_t start = 0; start + span <= n; start += static_cast<std::size_t>(shape.stride)) {
    SampleWindow w;
    WindowPhysics ph;
    for (std::size_t k = 0; k < static_cast<std::size_t>(shape.t_in); ++k) {
      const std::size_t i = start + k;
      append_position(w.bob_pos, snapshots[i].bob.position);
      append_position(w.eve_pos, snapshots[i].eve.position);
      for (const auto& c : bob_csi[i]) {
        w.bob_csi.push_back(static_cast<float>(c.real()));
        w.bob_csi.push_back(static_cast<float>(c.imag()));
      }
      for (const auto& c : eve_csi[i]) {
        w.eve_csi.push_back(static_cast<float>(c.real()));
        w.eve_csi.push_back(static_cast<float>(c.imag()));
      }
      append_placement(w.ma_pos, labels[i].placement);
    }
    for (std::size_t k = 0; k < static_cast<std::size_t>(shape.f_out); ++k) {
      append_placement(w.target, labels[start + static_cast<std::size_t>(shape.t_in) + k].placement);
    }
    for (std::size_t k = 0; k < span; ++k) {
      ph.bob.push_back(bob_ch[start + k]);
      ph.eve.push_back(eve_ch[start + k]);
      ph.noise_power.push_back(snapshots[start + k].noise_power);
    }
    w.meta.trajectory_id = static_cast<std::int64_t>(trajectory_id);
    w.meta.start = static_cast<std::int64_t>(start);
    w.meta.bob_speed_mps = norm(snapshots[start].bob.velocity);
    w.meta.eve_speed_mps = norm(snapshots[start].eve.velocity);
    out.windows.push_back(std::move(w));
    out.physics.push_back(std::move(ph));
  }
  return out;
}

std::vector<double> semantic_features(const SampleWindow& window, const ScenarioConfig& scenario,
                                      int t_in, double noise_power) {
  require(t_in >= 1, ErrorKind::kInvalidArgument, "t_in must be positive");
  const auto T = static_cast<std::size_t>(t_in);
  require(window.bob_pos.size() == 3 * T && window.eve_pos.size() == 3 * T &&
              window.bob_csi.size() == window.eve_csi.size() && window.bob_csi.size() % T == 0,
          ErrorKind::kInvalidArgument, "semantic_features: window shape mismatch");
  require(noise_power > 0.0, ErrorKind::kInvalidArgument, "noise power must be positive");
  const std::size_t csi_w = window.bob_csi.size() / T;
  const Vec3 bs = scenario.bs_position();
  std::vector<double> out(T * kNumSemantic, 0.0);

  auto pos = [](const std::vector<float>& v, std::size_t t) {
    return Vec3{v[3 * t], v[3 * t + 1], v[3 * t + 2]};
  };
  auto speed = [&](const std::vector<float>& v, std::size_t t) {
    if (T < 2) return 0.0;
    const std::size_t a = t == 0 ? 1 : t;  // step 0 reuses the step-1 difference
    return norm(pos(v, a) - pos(v, a - 1)) / scenario.dt_s;
  };

  for (std::size_t t = 0; t < T; ++t) {
    double* f = &out[t * kNumSemantic];
    const Vec3 ob = pos(window.bob_pos, t) - bs;
    const Vec3 oe = pos(window.eve_pos, t) - bs;
    f[0] = norm(ob);
    f[1] = norm(oe);
    f[2] = std::atan2(ob.y, ob.x);
    f[3] = std::atan2(ob.z, std::hypot(ob.x, ob.y));
    f[4] = std::atan2(oe.y, oe.x);
    f[5] = std::atan2(oe.z, std::hypot(oe.x, oe.y));
    f[6] = speed(window.bob_pos, t);
    f[7] = speed(window.eve_pos, t);

    double bob_energy = 0.0;
    cdouble cross{0.0, 0.0};
    for (std::size_t k = 0; k < csi_w / 2; ++k) {
      const cdouble hb{window.bob_csi[t * csi_w + 2 * k], window.bob_csi[t * csi_w + 2 * k + 1]};
      const cdouble he{window.eve_csi[t * csi_w + 2 * k], window.eve_csi[t * csi_w + 2 * k + 1]};
      bob_energy += std::norm(hb);
      cross += std::conj(he) * hb;
    }
    const double cb = std::log2(1.0 + scenario.p_max * bob_energy / noise_power);
    const double ce = bob_energy > 0.0
                          ? std::log2(1.0 + scenario.p_max * std::norm(cross) /
                                                (bob_energy * noise_power))
                          : 0.0;
    f[8] = cb;
    f[9] = ce;
    f[10] = std::max(cb - ce, 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

std::size_t NormStats::floored_count() const {
  std::size_t c = 0;
  for (const auto& f : floored) c += static_cast<std::size_t>(std::count(f.begin(), f.end(), 1));
  return c;
}

void NormStats::apply(Stream s, std::span<double> values) const {
  const auto& mu = mean[idx(s)];
  const auto& sd = stddev[idx(s)];
  require(!mu.empty() && values.size() % mu.size() == 0, ErrorKind::kState,
          "normalization statistics missing or mismatched");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t d = i % mu.size();
    values[i] = (values[i] - mu[d]) / sd[d];
  }
}

void NormStats::invert(Stream s, std::span<double> values) const {
  const auto& mu = mean[idx(s)];
  const auto& sd = stddev[idx(s)];
  require(!mu.empty() && values.size() % mu.size() == 0, ErrorKind::kState,
          "normalization statistics missing or mismatched");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t d = i % mu.size();
    values[i] = values[i] * sd[d] + mu[d];
  }
}

NormStats fit_norm_stats(const std::vector<SampleWindow>& train) {
  require(!train.empty(), ErrorKind::kInvalidArgument, "cannot fit statistics on no windows");
  NormStats st;
  const std::size_t T = train.front().bob_pos.size() / 3;
  require(T > 0, ErrorKind::kInvalidArgument, "empty window");
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    const auto stream = static_cast<Stream>(s);
    const std::size_t width = train.front().stream(stream).size() / T;
    std::vector<double> sum(width, 0.0);
    std::size_t rows = 0;
    for (const auto& w : train) {
      const auto& v = w.stream(stream);
      require(v.size() == width * T, ErrorKind::kInvalidArgument, "inconsistent window shapes");
      for (std::size_t i = 0; i < v.size(); ++i) sum[i % width] += v[i];
      rows += T;
    }
    std::vector<double> mu(width), var(width, 0.0);
    for (std::size_t d = 0; d < width; ++d) mu[d] = sum[d] / static_cast<double>(rows);
    for (const auto& w : train) {
      const auto& v = w.stream(stream);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double e = v[i] - mu[i % width];
        var[i % width] += e * e;
      }
    }
    std::vector<double> sd(width);
    std::vector<std::uint8_t> fl(width, 0);
    for (std::size_t d = 0; d < width; ++d) {
      sd[d] = std::sqrt(var[d] / static_cast<double>(rows));
      if (!(sd[d] >= NormStats::kStdFloor)) {
        sd[d] = NormStats::kStdFloor;
        fl[d] = 1;
      }
    }
    st.mean[s] = std::move(mu);
    st.stddev[s] = std::move(sd);
    st.floored[s] = std::move(fl);
  }
  return st;
}

SampleWindow normalize(const SampleWindow& window, const NormStats& stats) {
  require(!stats.empty(), ErrorKind::kState, "normalization statistics missing");
  SampleWindow out = window;
  auto convert = [&](Stream s, const std::vector<float>& in, std::vector<float>& dst) {
    std::vector<double> tmp(in.begin(), in.end());
    stats.apply(s, tmp);
    dst.resize(tmp.size());
    std::transform(tmp.begin(), tmp.end(), dst.begin(),
                   [](double v) { return static_cast<float>(v); });
  };
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    const auto stream = static_cast<Stream>(s);
    convert(stream, window.stream(stream), out.stream(stream));
  }
  convert(Stream::kMaPos, window.target, out.target);
  return out;
}

std::vector<double> denormalize_positions(std::span<const double> pred, const NormStats& stats) {
  require(!stats.empty(), ErrorKind::kState, "normalization statistics missing");
  std::vector<double> out(pred.begin(), pred.end());
  stats.invert(Stream::kMaPos, out);
  for (std::size_t i = 0; i < out.size(); i += 3) out[i] = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Splits and generation

std::array<std::vector<std::int64_t>, 3> split_trajectory_ids(std::vector<std::int64_t> ids,
                                                              std::array<double, 3> ratios,
                                                              std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r >= 0.0)) fail(ErrorKind::kConfig, "split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    fail(ErrorKind::kConfig, "split ratios must sum to 1");
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t n = ids.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n) {
    fail(ErrorKind::kConfig, "too few trajectories (" + std::to_string(n) + ") for a three-way split");
  }
  std::mt19937_64 rng(stream_seed(seed, 0x73706c6974));
  // Fisher-Yates with an explicit draw so the order is library independent.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }
  std::array<std::vector<std::int64_t>, 3> out;
  out[0].assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  out[1].assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  out[2].assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), ids.end());
  for (auto& part : out) std::sort(part.begin(), part.end());
  return out;
}

DatasetSplits split_dataset(const Dataset& all, std::array<double, 3> ratios, std::uint64_t seed) {
  std::vector<std::int64_t> ids;
  ids.reserve(all.windows.size());
  for (const auto& w : all.windows) ids.push_back(w.meta.trajectory_id);
  const auto parts = split_trajectory_ids(ids, ratios, seed);

  DatasetSplits out;
  Dataset* dst[3] = {&out.train, &out.valid, &out.test};
  for (Dataset* d : dst) {
    d->config = all.config;
    d->scenario = all.scenario;
    d->shape = all.shape;
    d->seed = all.seed;
    d->stats = all.stats;
  }
  for (std::size_t i = 0; i < all.windows.size(); ++i) {
    const auto id = all.windows[i].meta.trajectory_id;
    for (std::size_t p = 0; p < 3; ++p) {
      if (std::binary_search(parts[p].begin(), parts[p].end(), id)) {
        dst[p]->windows.push_back(all.windows[i]);
        if (i < all.physics.size()) dst[p]->physics.push_back(all.physics[i]);
        break;
      }
    }
  }
  return out;
}

GenerationPlan GenerationPlan::from_kv(const KeyValues& kv) {
  GenerationPlan p;
  p.scenario = ScenarioConfig::from_kv(kv);
  p.pso = PsoConfig::from_kv(kv);
  p.shape = WindowShape::from_kv(kv);
  p.n_trajectories = static_cast<int>(kv.get_int("n_trajectories", p.n_trajectories));
  if (p.n_trajectories < 1) fail(ErrorKind::kConfig, "n_trajectories must be positive");
  const auto r = kv.get_doubles("split_ratios", {0.70, 0.15, 0.15});
  if (r.size() != 3) fail(ErrorKind::kConfig, "split_ratios needs three values");
  p.split_ratios = {r[0], r[1], r[2]};
  if (p.scenario.snapshots_per_trajectory < p.shape.span()) {
    fail(ErrorKind::kConfig, "snapshots_per_trajectory is shorter than t_in + f_out");
  }
  return p;
}

KeyValues GenerationPlan::to_kv() const {
  KeyValues kv;
  scenario.to_kv(kv);
  pso.to_kv(kv);
  shape.to_kv(kv);
  kv.set("n_trajectories", n_trajectories);
  kv.set("split_ratios", format_double(split_ratios[0]) + ", " + format_double(split_ratios[1]) +
                             ", " + format_double(split_ratios[2]));
  return kv;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::size_t err_index = n;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          // Report the lowest failing index so errors are deterministic.
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

Dataset generate_dataset(const GenerationPlan& plan, std::uint64_t seed, int workers,
                         std::vector<std::int64_t> ids, std::size_t* skipped) {
  if (ids.empty()) {
    ids.resize(static_cast<std::size_t>(plan.n_trajectories));
    std::iota(ids.begin(), ids.end(), std::int64_t{0});
  }
  PsoConfig pso = plan.pso;
  pso.seed = stream_seed(seed, plan.pso.seed, 0x6c6162);

  std::vector<WindowBatch> batches(ids.size());
  std::vector<std::size_t> skip(ids.size(), 0);
  parallel_for(ids.size(), workers, [&](std::size_t i) {
    const auto id = static_cast<std::uint64_t>(ids[i]);
    const auto snaps = build_snapshot_sequence(seed, plan.scenario, id);
    const auto labels = label_trajectory(snaps, plan.scenario, pso, id);
    batches[i] = build_windows(snaps, labels, plan.scenario, plan.shape, id, seed, &skip[i]);
  });

  Dataset ds;
  ds.config = plan.to_kv();
  ds.scenario = plan.scenario;
  ds.shape = plan.shape;
  ds.seed = seed;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    for (auto& w : batches[i].windows) ds.windows.push_back(std::move(w));
    for (auto& p : batches[i].physics) ds.physics.push_back(std::move(p));
    if (skipped) *skipped += skip[i];
  }
  return ds;
}

DatasetSplits generate_splits(const GenerationPlan& plan, std::uint64_t seed, int workers) {
  const Dataset all = generate_dataset(plan, seed, workers);
  DatasetSplits s = split_dataset(all, plan.split_ratios, seed);
  const NormStats stats = fit_norm_stats(s.train.windows);
  s.train.stats = stats;
  s.valid.stats = stats;
  s.test.stats = stats;
  return s;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

template <typename T>
std::string as_bytes(const std::vector<T>& v) {
  std::string s(v.size() * sizeof(T), '\0');
  if (!v.empty()) std::memcpy(s.data(), v.data(), s.size());
  return s;
}

template <typename T>
std::vector<T> from_bytes(const std::string& s) {
  std::vector<T> v(s.size() / sizeof(T));
  if (!v.empty()) std::memcpy(v.data(), s.data(), v.size() * sizeof(T));
  return v;
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::kIo, "cannot write " + p.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorKind::kIo, "short write to " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) fail(ErrorKind::kCorruptDataset, "missing file " + p.string());
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

struct TensorEntry {
  std::string name;
  std::string dtype;
  std::vector<std::int64_t> shape;
  std::string bytes;
};

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "float32") return 4;
  if (dtype == "float64" || dtype == "int64") return 8;
  fail(ErrorKind::kCorruptDataset, "unknown dtype " + dtype);
}

std::string extension(const std::string& dtype) {
  if (dtype == "float32") return ".f32";
  if (dtype == "float64") return ".f64";
  return ".i64";
}

json tensor_json(const TensorEntry& t) {
  return {{"name", t.name},
          {"dtype", t.dtype},
          {"shape", t.shape},
          {"file", t.name + extension(t.dtype)},
          {"fnv1a64", hex64(fnv1a64(t.bytes))}};
}

json stats_json(const NormStats& st) {
  if (st.empty()) return nullptr;
  json out = json::object();
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    out[kStreamNames[s]] = {{"mean", st.mean[s]}, {"std", st.stddev[s]}, {"floored", st.floored[s]}};
  }
  return out;
}

NormStats stats_from_json(const json& j) {
  NormStats st;
  if (j.is_null()) return st;
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    const json& e = j.at(kStreamNames[s]);
    st.mean[s] = e.at("mean").get<std::vector<double>>();
    st.stddev[s] = e.at("std").get<std::vector<double>>();
    st.floored[s] = e.at("floored").get<std::vector<std::uint8_t>>();
    if (st.mean[s].size() != st.stddev[s].size() || st.mean[s].size() != st.floored[s].size()) {
      fail(ErrorKind::kCorruptDataset, "normalization statistics have inconsistent lengths");
    }
    for (double sd : st.stddev[s]) {
      if (!(sd > 0.0)) fail(ErrorKind::kCorruptDataset, "non-positive standard deviation");
    }
  }
  return st;
}

}  // namespace

std::string norm_stats_to_json(const NormStats& stats) { return stats_json(stats).dump(); }

NormStats norm_stats_from_json(const std::string& text) {
  try {
    return stats_from_json(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorKind::kCorruptDataset, std::string("malformed normalization statistics: ") + e.what());
  }
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  const auto N = static_cast<std::int64_t>(ds.windows.size());
  const std::int64_t T = ds.shape.t_in;
  const std::int64_t F = ds.shape.f_out;
  const std::int64_t S = ds.shape.span();
  const int n_ant = ds.n_antennas();
  const std::int64_t n_paths = ds.scenario.p_nlos + 1;
  require(ds.physics.size() == ds.windows.size(), ErrorKind::kInvalidArgument,
          "physics and windows differ in length");

  std::vector<TensorEntry> streams;
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    const auto stream = static_cast<Stream>(s);
    std::vector<float> flat;
    for (const auto& w : ds.windows) flat.insert(flat.end(), w.stream(stream).begin(), w.stream(stream).end());
    streams.push_back({kStreamNames[s], "float32", {N, T, WindowShape::width(stream, n_ant)}, as_bytes(flat)});
  }
  {
    std::vector<float> flat;
    for (const auto& w : ds.windows) flat.insert(flat.end(), w.target.begin(), w.target.end());
    streams.push_back({"target", "float32", {N, F, 3 * n_ant}, as_bytes(flat)});
  }

  std::vector<TensorEntry> aux;
  for (int role = 0; role < 2; ++role) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(N * S * n_paths * 4));
    for (const auto& ph : ds.physics) {
      const auto& chans = role == 0 ? ph.bob : ph.eve;
      require(static_cast<std::int64_t>(chans.size()) == S, ErrorKind::kInvalidArgument,
              "physics step count mismatch");
      for (const auto& c : chans) {
        require(static_cast<std::int64_t>(c.n_paths()) == n_paths, ErrorKind::kInvalidArgument,
                "physics path count mismatch");
        for (std::size_t p = 0; p < c.n_paths(); ++p) {
          flat.push_back(c.coef[p].real());
          flat.push_back(c.coef[p].imag());
          flat.push_back(c.ky[p]);
          flat.push_back(c.kz[p]);
        }
      }
    }
    aux.push_back({role == 0 ? "physics_bob" : "physics_eve", "float64", {N, S, n_paths, 4}, as_bytes(flat)});
  }
  {
    std::vector<double> noise, speeds;
    std::vector<std::int64_t> ids;
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
      noise.insert(noise.end(), ds.physics[i].noise_power.begin(), ds.physics[i].noise_power.end());
      speeds.push_back(ds.windows[i].meta.bob_speed_mps);
      speeds.push_back(ds.windows[i].meta.eve_speed_mps);
      ids.push_back(ds.windows[i].meta.trajectory_id);
      ids.push_back(ds.windows[i].meta.start);
    }
    aux.push_back({"noise_power", "float64", {N, S}, as_bytes(noise)});
    aux.push_back({"meta_speed", "float64", {N, 2}, as_bytes(speeds)});
    aux.push_back({"meta_index", "int64", {N, 2}, as_bytes(ids)});
  }

  json m;
  m["format"] = "mapp-dataset";
  m["version"] = kManifestVersion;
  m["num_windows"] = N;
  m["seed"] = ds.seed;
  m["config"] = ds.config.entries();
  m["config_hash"] = hex64(ds.config.hash());
  m["streams"] = json::array();
  for (std::size_t i = 0; i < streams.size(); ++i) {
    json e = tensor_json(streams[i]);
    e["role"] = i < kNumStreams ? "input" : "target";
    m["streams"].push_back(e);
  }
  m["aux"] = json::array();
  for (const auto& t : aux) m["aux"].push_back(tensor_json(t));
  m["norm_stats"] = stats_json(ds.stats);

  for (const auto& t : streams) write_file(dir / (t.name + extension(t.dtype)), t.bytes);
  for (const auto& t : aux) write_file(dir / (t.name + extension(t.dtype)), t.bytes);
  write_file(dir / kManifestName, m.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_file(dir / kManifestName));
  } catch (const json::exception& e) {
    fail(ErrorKind::kCorruptDataset, std::string("unreadable manifest: ") + e.what());
  }
  try {
    if (m.at("format") != "mapp-dataset" || m.at("version") != kManifestVersion) {
      fail(ErrorKind::kCorruptDataset, "unsupported manifest format");
    }
    KeyValues kv;
    for (const auto& [k, v] : m.at("config").items()) kv.set(k, v.get<std::string>());
    if (hex64(kv.hash()) != m.at("config_hash").get<std::string>()) {
      fail(ErrorKind::kCorruptDataset, "config hash mismatch");
    }
    Dataset ds;
    ds.config = kv;
    GenerationPlan plan;
    try {
      plan = GenerationPlan::from_kv(kv);
    } catch (const Error& e) {
      fail(ErrorKind::kCorruptDataset, std::string("manifest config rejected: ") + e.what());
    }
    ds.scenario = plan.scenario;
    ds.shape = plan.shape;
    ds.seed = m.at("seed").get<std::uint64_t>();
    const auto N = m.at("num_windows").get<std::int64_t>();
    const std::int64_t T = ds.shape.t_in;
    const std::int64_t F = ds.shape.f_out;
    const std::int64_t S = ds.shape.span();
    const int n_ant = ds.n_antennas();
    const std::int64_t n_paths = ds.scenario.p_nlos + 1;
    if (N < 0) fail(ErrorKind::kCorruptDataset, "negative window count");

    auto load_tensor = [&](const json& e, const std::string& name, const std::string& dtype,
                           const std::vector<std::int64_t>& shape) {
      if (e.at("name") != name) fail(ErrorKind::kCorruptDataset, "unexpected tensor " + e.at("name").get<std::string>());
      if (e.at("dtype") != dtype) fail(ErrorKind::kCorruptDataset, name + ": dtype mismatch");
      if (e.at("shape").get<std::vector<std::int64_t>>() != shape) {
        fail(ErrorKind::kCorruptDataset, name + ": shape mismatch");
      }
      const std::string file = e.at("file").get<std::string>();
      if (file != name + extension(dtype)) fail(ErrorKind::kCorruptDataset, name + ": file name mismatch");
      std::string bytes = read_file(dir / file);
      std::int64_t count = 1;
      for (auto d : shape) count *= d;
      if (bytes.size() != static_cast<std::size_t>(count) * dtype_size(dtype)) {
        fail(ErrorKind::kCorruptDataset, name + ": file size does not match shape");
      }
      if (hex64(fnv1a64(bytes)) != e.at("fnv1a64").get<std::string>()) {
        fail(ErrorKind::kCorruptDataset, name + ": content hash mismatch");
      }
      return bytes;
    };

    const json& streams = m.at("streams");
    if (!streams.is_array() || streams.size() != kNumStreams + 1) {
      fail(ErrorKind::kCorruptDataset, "manifest must list five input streams and one target");
    }
    ds.windows.resize(static_cast<std::size_t>(N));
    for (std::size_t s = 0; s < kNumStreams; ++s) {
      const auto stream = static_cast<Stream>(s);
      if (streams[s].at("role") != "input") fail(ErrorKind::kCorruptDataset, "stream role mismatch");
      const std::int64_t width = WindowShape::width(stream, n_ant);
      const auto flat = from_bytes<float>(load_tensor(streams[s], kStreamNames[s], "float32", {N, T, width}));
      const auto step = static_cast<std::size_t>(T * width);
      for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        ds.windows[i].stream(stream).assign(flat.begin() + static_cast<std::ptrdiff_t>(i * step),
                                            flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * step));
      }
    }
    {
      if (streams[kNumStreams].at("role") != "target") fail(ErrorKind::kCorruptDataset, "stream role mismatch");
      const auto flat = from_bytes<float>(load_tensor(streams[kNumStreams], "target", "float32", {N, F, 3 * n_ant}));
      const auto step = static_cast<std::size_t>(F * 3 * n_ant);
      for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        ds.windows[i].target.assign(flat.begin() + static_cast<std::ptrdiff_t>(i * step),
                                    flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * step));
      }
    }

    const json& aux = m.at("aux");
    if (!aux.is_array() || aux.size() != 5) fail(ErrorKind::kCorruptDataset, "auxiliary tensor list mismatch");
    ds.physics.resize(static_cast<std::size_t>(N));
    for (int role = 0; role < 2; ++role) {
      const auto flat = from_bytes<double>(load_tensor(aux[static_cast<std::size_t>(role)],
                                                       role == 0 ? "physics_bob" : "physics_eve",
                                                       "float64", {N, S, n_paths, 4}));
      std::size_t k = 0;
      for (auto& ph : ds.physics) {
        auto& chans = role == 0 ? ph.bob : ph.eve;
        chans.resize(static_cast<std::size_t>(S));
        for (auto& c : chans) {
          c.coef.resize(static_cast<std::size_t>(n_paths));
          c.ky.resize(static_cast<std::size_t>(n_paths));
          c.kz.resize(static_cast<std::size_t>(n_paths));
          for (std::size_t p = 0; p < static_cast<std::size_t>(n_paths); ++p) {
            c.coef[p] = {flat[k], flat[k + 1]};
            c.ky[p] = flat[k + 2];
            c.kz[p] = flat[k + 3];
            k += 4;
          }
        }
      }
    }
    {
      const auto noise = from_bytes<double>(load_tensor(aux[2], "noise_power", "float64", {N, S}));
      const auto speeds = from_bytes<double>(load_tensor(aux[3], "meta_speed", "float64", {N, 2}));
      const auto ids = from_bytes<std::int64_t>(load_tensor(aux[4], "meta_index", "int64", {N, 2}));
      for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        ds.physics[i].noise_power.assign(noise.begin() + static_cast<std::ptrdiff_t>(i * S),
                                         noise.begin() + static_cast<std::ptrdiff_t>((i + 1) * S));
        ds.windows[i].meta = {ids[2 * i], ids[2 * i + 1], speeds[2 * i], speeds[2 * i + 1]};
      }
    }
    ds.stats = stats_from_json(m.at("norm_stats"));
    for (std::size_t s = 0; s < kNumStreams && !ds.stats.empty(); ++s) {
      if (static_cast<int>(ds.stats.mean[s].size()) != WindowShape::width(static_cast<Stream>(s), n_ant)) {
        fail(ErrorKind::kCorruptDataset, "normalization statistics width mismatch");
      }
    }
    return ds;
  } catch (const json::exception& e) {
    fail(ErrorKind::kCorruptDataset, std::string("malformed manifest: ") + e.what());
  }
}

void save_splits(const DatasetSplits& splits, const fs::path& dir) {
  save_dataset(splits.train, dir / "train");
  save_dataset(splits.valid, dir / "valid");
  save_dataset(splits.test, dir / "test");
}

DatasetSplits load_splits(const fs::path& dir) {
  DatasetSplits s;
  s.train = load_dataset(dir / "train");
  s.valid = load_dataset(dir / "valid");
  s.test = load_dataset(dir / "test");
  if (!(s.train.stats == s.valid.stats) || !(s.train.stats == s.test.stats)) {
    fail(ErrorKind::kCorruptDataset, "splits carry different normalization statistics");
  }
  return s;
}

}  // namespace mapp
