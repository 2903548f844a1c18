// SPDX-License-Identifier: Apache-2.0
#include "mapp/learn/batch.hpp"

#include <numeric>

#include "mapp/error.hpp"

namespace mapp::learn {

namespace {

torch::Tensor to_tensor(const std::vector<double>& v, std::vector<std::int64_t> shape,
                        torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<double*>(v.data()), shape, torch::kFloat64).clone();
  return t.to(dtype);
}

}  // namespace

Geometry Geometry::from_scenario(const ScenarioConfig& cfg, torch::Dtype dtype) {
  const auto regions = array_regions(cfg);
  std::vector<double> a, b, c, d;
  for (const auto& r : regions) {
    a.push_back(r.y_min);
    b.push_back(r.y_max);
    c.push_back(r.z_min);
    d.push_back(r.z_max);
  }
  const auto n = static_cast<std::int64_t>(regions.size());
  Geometry g;
  g.y_min = to_tensor(a, {n}, dtype);
  g.y_max = to_tensor(b, {n}, dtype);
  g.z_min = to_tensor(c, {n}, dtype);
  g.z_max = to_tensor(d, {n}, dtype);
  g.lambda_m = cfg.lambda_m();
  g.p_max = cfg.p_max;
  return g;
}

std::vector<double> semantic_scales() {
  // distances, angles, speeds, capacities
  return {100.0, 100.0, 1.0, 1.0, 1.0, 1.0, 10.0, 10.0, 1.0, 1.0, 1.0};
}

std::pair<torch::Tensor, torch::Tensor> placement_stats(const NormStats& stats,
                                                        torch::Dtype dtype) {
  require(!stats.empty(), ErrorKind::kState, "normalization statistics missing");
  const auto& mu = stats.mean[static_cast<std::size_t>(Stream::kMaPos)];
  const auto& sd = stats.stddev[static_cast<std::size_t>(Stream::kMaPos)];
  std::vector<double> m, s;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (i % 3 == 0) continue;
    m.push_back(mu[i]);
    s.push_back(sd[i]);
  }
  const auto n = static_cast<std::int64_t>(m.size());
  return {to_tensor(m, {n}, dtype), to_tensor(s, {n}, dtype)};
}

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices, torch::Dtype dtype) {
  require(!indices.empty(), ErrorKind::kInvalidArgument, "empty batch");
  require(!ds.stats.empty(), ErrorKind::kState, "dataset has no normalization statistics");
  const auto B = static_cast<std::int64_t>(indices.size());
  const std::int64_t T = ds.shape.t_in;
  const std::int64_t F = ds.shape.f_out;
  const int n_ant = ds.n_antennas();
  const std::int64_t P = ds.scenario.p_nlos + 1;

  Batch b;
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    const auto stream = static_cast<Stream>(s);
    const std::int64_t w = WindowShape::width(stream, n_ant);
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(B * T * w));
    for (auto i : indices) {
      const auto& v = ds.windows.at(i).stream(stream);
      const std::size_t off = flat.size();
      flat.insert(flat.end(), v.begin(), v.end());
      ds.stats.apply(stream, std::span<double>(flat.data() + off, v.size()));
    }
    torch::Tensor t = to_tensor(flat, {B, T, w}, dtype);
    switch (stream) {
      case Stream::kBobPos: b.bob_pos = t; break;
      case Stream::kEvePos: b.eve_pos = t; break;
      case Stream::kBobCsi: b.bob_csi = t; break;
      case Stream::kEveCsi: b.eve_csi = t; break;
      case Stream::kMaPos: b.ma_pos = t; break;
    }
  }

  const auto scales = semantic_scales();
  std::vector<double> sem, target, last;
  for (auto i : indices) {
    const auto& w = ds.windows[i];
    auto f = semantic_features(w, ds.scenario, ds.shape.t_in, ds.physics.at(i).noise_power.front());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] /= scales[k % kNumSemantic];
    sem.insert(sem.end(), f.begin(), f.end());
    target.insert(target.end(), w.target.begin(), w.target.end());
    last.insert(last.end(), w.ma_pos.end() - 3 * n_ant, w.ma_pos.end());
  }
  b.semantic = to_tensor(sem, {B, T, kNumSemantic}, dtype);
  b.target = to_tensor(target, {B, F, 3 * n_ant}, dtype);
  b.last_ma = to_tensor(last, {B, 3 * n_ant}, dtype);

  std::vector<double> phys[8];
  std::vector<double> noise;
  for (auto i : indices) {
    const auto& ph = ds.physics.at(i);
    for (std::int64_t f = 0; f < F; ++f) {
      const auto step = static_cast<std::size_t>(T + f);
      const SpatialChannel* chans[2] = {&ph.bob.at(step), &ph.eve.at(step)};
      for (int r = 0; r < 2; ++r) {
        const auto& c = *chans[r];
        require(static_cast<std::int64_t>(c.n_paths()) == P, ErrorKind::kInvalidArgument,
                "path count mismatch");
        for (std::size_t p = 0; p < c.n_paths(); ++p) {
          phys[4 * r + 0].push_back(c.coef[p].real());
          phys[4 * r + 1].push_back(c.coef[p].imag());
          phys[4 * r + 2].push_back(c.ky[p]);
          phys[4 * r + 3].push_back(c.kz[p]);
        }
      }
      noise.push_back(ph.noise_power.at(step));
    }
  }
  torch::Tensor* dst[8] = {&b.bob_coef_re, &b.bob_coef_im, &b.bob_ky, &b.bob_kz,
                           &b.eve_coef_re, &b.eve_coef_im, &b.eve_ky, &b.eve_kz};
  for (int k = 0; k < 8; ++k) *dst[k] = to_tensor(phys[k], {B, F, P}, dtype);
  b.noise = to_tensor(noise, {B, F}, dtype);
  return b;
}

Batch make_batch(const Dataset& ds, torch::Dtype dtype) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(ds, idx, dtype);
}

Batch select(const Batch& b, const torch::Tensor& index) {
  Batch o;
  auto pick = [&](const torch::Tensor& t) { return t.index_select(0, index); };
  o.bob_pos = pick(b.bob_pos);
  o.eve_pos = pick(b.eve_pos);
  o.bob_csi = pick(b.bob_csi);
  o.eve_csi = pick(b.eve_csi);
  o.ma_pos = pick(b.ma_pos);
  o.semantic = pick(b.semantic);
  o.target = pick(b.target);
  o.last_ma = pick(b.last_ma);
  o.bob_coef_re = pick(b.bob_coef_re);
  o.bob_coef_im = pick(b.bob_coef_im);
  o.bob_ky = pick(b.bob_ky);
  o.bob_kz = pick(b.bob_kz);
  o.eve_coef_re = pick(b.eve_coef_re);
  o.eve_coef_im = pick(b.eve_coef_im);
  o.eve_ky = pick(b.eve_ky);
  o.eve_kz = pick(b.eve_kz);
  o.noise = pick(b.noise);
  return o;
}

}  // namespace mapp::learn
