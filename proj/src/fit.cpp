#include "zmono/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "zmono/losses.hpp"

namespace zmono {

void FitConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (lambda_lap < 0.0 || lambda_nrm < 0.0) throw std::invalid_argument("loss weights must be >= 0");
  if (R < 3) throw std::invalid_argument("R must be >= 3");
  if (G < 1) throw std::invalid_argument("G must be >= 1");
  if (!(k > 0.0)) throw std::invalid_argument("k must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("adam eps must be > 0");
  if (tiles < 1) throw std::invalid_argument("tiles must be >= 1");
  if (overlap < 0.0) throw std::invalid_argument("overlap must be >= 0");
}

std::string FitReport::to_json() const {
  nlohmann::json j;
  j["steps"] = steps;
  j["wall_seconds"] = wall_seconds;
  j["final_total"] = final_total;
  j["final_rmse"] = final_rmse;
  j["loss"] = {{"height", height}, {"laplacian", laplacian}, {"normal", normal}, {"total", total}};
  return j.dump(1);
}

HeightMap build_target_heightmap(const PointCloud& cloud, int R) {
  if (R < 1) throw std::invalid_argument("R must be positive");
  HeightMap out(R, -std::numeric_limits<double>::infinity(), false);
  for (const auto& p : cloud.points) {
    const int u = std::clamp(static_cast<int>(std::floor((p.x + 1.0) * 0.5 * R)), 0, R - 1);
    const int v = std::clamp(static_cast<int>(std::floor((p.y + 1.0) * 0.5 * R)), 0, R - 1);
    const auto i = out.index(u, v);
    out.heights[i] = std::max(out.heights[i], p.z);
    out.valid[i] = 1;
  }
  for (std::size_t i = 0; i < out.heights.size(); ++i) {
    if (!out.valid[i]) out.heights[i] = 0.0;
  }
  return out;
}

ZMonoField initial_field(const HeightMap& target, const FitConfig& cfg) {
  const int G = cfg.G, R = target.res;
  double ground = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < target.heights.size(); ++i) {
    if (target.valid[i]) ground = std::min(ground, target.heights[i]);
  }
  if (!std::isfinite(ground)) ground = 0.0;

  std::vector<double> sum(static_cast<std::size_t>(G) * G, 0.0);
  std::vector<int> cnt(sum.size(), 0);
  for (int v = 0; v < R; ++v) {
    const int j = std::min(G - 1, static_cast<int>((v + 0.5) * G / R));
    for (int u = 0; u < R; ++u) {
      if (!target.is_valid(u, v)) continue;
      const int i = std::min(G - 1, static_cast<int>((u + 0.5) * G / R));
      sum[static_cast<std::size_t>(j) * G + i] += target.at(u, v);
      ++cnt[static_cast<std::size_t>(j) * G + i];
    }
  }
  ZMonoField f(G, cfg.k, cfg.window, ground);
  for (std::size_t c = 0; c < sum.size(); ++c) {
    if (cnt[c]) f.h[c] = sum[c] / cnt[c];
    f.h[c] = std::clamp(f.h[c], -1.0, 1.0);
  }
  return f;
}

namespace {

// Fixed sampling stencil of the R x R supervision grid: per sample the
// window's first cell plus its softmax weights, and the transposed
// (cell -> sample taps) map for the gradient gather.
struct Stencil {
  int R = 0, G = 0, n = 0, taps = 0;
  std::vector<std::uint32_t> base;
  std::vector<double> w;               // R^2 * taps
  std::vector<std::uint32_t> offsets;  // G^2 + 1
  std::vector<std::uint32_t> entries;  // sample * taps + tap, ascending sample order
};

Stencil build_stencil(const ZMonoField& field, int R) {
  Stencil st;
  st.R = R;
  st.G = field.grid_res;
  st.n = field.window;
  st.taps = st.n * st.n;
  const std::size_t S = static_cast<std::size_t>(R) * R;
  st.base.resize(S);
  st.w.resize(S * st.taps);
  const double cell = 2.0 / R;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    const double y = -1.0 + (v + 0.5) * cell;
    for (int u = 0; u < R; ++u) {
      const std::size_t s = static_cast<std::size_t>(v) * R + u;
      const NeighborWeights nw = neighbor_weights(field, -1.0 + (u + 0.5) * cell, y);
      st.base[s] = nw.cells[0];
      for (int t = 0; t < st.taps; ++t) st.w[s * st.taps + t] = nw.w[t];
    }
  }
  const std::size_t cells = static_cast<std::size_t>(st.G) * st.G;
  st.offsets.assign(cells + 1, 0);
  auto cell_of = [&](std::size_t s, int t) {
    return st.base[s] + static_cast<std::uint32_t>((t / st.n) * st.G + t % st.n);
  };
  for (std::size_t s = 0; s < S; ++s) {
    for (int t = 0; t < st.taps; ++t) ++st.offsets[cell_of(s, t) + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) st.offsets[c + 1] += st.offsets[c];
  st.entries.resize(S * st.taps);
  std::vector<std::uint32_t> fill(st.offsets.begin(), st.offsets.end() - 1);
  for (std::size_t s = 0; s < S; ++s) {
    for (int t = 0; t < st.taps; ++t) {
      st.entries[fill[cell_of(s, t)]++] = static_cast<std::uint32_t>(s * st.taps + t);
    }
  }
  return st;
}

constexpr double kRootTol = 1e-12;
constexpr int kMaxRootIters = 100;

// Root of sum_t w_t tanh(k (z - hv_t)) on [-1, 1] starting from `z`.
// Returns false when the root is pinned to an end of the domain.
bool solve_local(const double* w, const double* hv, int taps, double k, double& z) {
  double lo = -1.0, hi = 1.0;
  double f = 0.0;
  for (int it = 0; it < kMaxRootIters; ++it) {
    f = 0.0;
    double df = 0.0;
    for (int t = 0; t < taps; ++t) {
      const double th = std::tanh(k * (z - hv[t]));
      f += w[t] * th;
      df += w[t] * (1.0 - th * th);
    }
    if (std::abs(f) < kRootTol) return true;
    if (f < 0.0) {
      lo = z;
    } else {
      hi = z;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) break;
    const double newton = df > 0.0 ? z - f / (k * df) : lo - 1.0;
    z = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  // Bracket collapsed: a root strictly inside means the residual is at
  // rounding level; collapse onto an end means the plateau case.
  if (z <= -1.0 + 1e-9) {
    z = -1.0;
    return false;
  }
  if (z >= 1.0 - 1e-9) {
    z = 1.0;
    return false;
  }
  return true;
}

struct Forward {
  HeightMap pred;
  std::vector<double> denom;  // sum_t w_t sech^2, 0 for pinned roots
};

void forward(const Stencil& st, const ZMonoField& field, bool warm, Forward& fw) {
  const int R = st.R, G = st.G, n = st.n, taps = st.taps;
  const double k = field.sharpness;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    double hv[kMaxTaps];
    for (int u = 0; u < R; ++u) {
      const std::size_t s = static_cast<std::size_t>(v) * R + u;
      const double* w = &st.w[s * taps];
      for (int t = 0; t < taps; ++t) hv[t] = field.h[st.base[s] + (t / n) * G + t % n];
      double z = 0.0;
      if (warm) {
        z = std::clamp(fw.pred.heights[s], -0.999999, 0.999999);
      } else {
        for (int t = 0; t < taps; ++t) z += w[t] * hv[t];
        z = std::clamp(z, -0.999, 0.999);
      }
      const bool interior = solve_local(w, hv, taps, k, z);
      double d = 0.0;
      if (interior) {
        for (int t = 0; t < taps; ++t) d += w[t] * sech2(k * (z - hv[t]));
      }
      fw.pred.heights[s] = z;
      fw.denom[s] = d;
    }
  }
}

struct LossSnapshot {
  double height = 0, lap = 0, nrm = 0, total = 0;
};

LossSnapshot losses(const Forward& fw, const HeightMap& target, const FitConfig& cfg,
                    std::vector<double>* dldh) {
  LossSnapshot out;
  LossTerm lh = loss_height(fw.pred, target);
  out.height = lh.value;
  if (dldh) *dldh = std::move(lh.grad);
  if (cfg.lambda_lap > 0.0) {
    const LossTerm l = loss_laplacian(fw.pred);
    out.lap = l.value;
    if (dldh) {
      for (std::size_t i = 0; i < dldh->size(); ++i) (*dldh)[i] += cfg.lambda_lap * l.grad[i];
    }
  }
  if (cfg.lambda_nrm > 0.0) {
    const LossTerm l = loss_normal_tv(fw.pred);
    out.nrm = l.value;
    if (dldh) {
      for (std::size_t i = 0; i < dldh->size(); ++i) (*dldh)[i] += cfg.lambda_nrm * l.grad[i];
    }
  }
  out.total = out.height + cfg.lambda_lap * out.lap + cfg.lambda_nrm * out.nrm;
  return out;
}

void backward(const Stencil& st, const ZMonoField& field, const Forward& fw,
              const std::vector<double>& dldh, std::vector<double>& grad) {
  const int G = st.G, taps = st.taps;
  const double k = field.sharpness;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < G; ++j) {
    for (int i = 0; i < G; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * G + i;
      const double hc = field.h[c];
      double g = 0.0;
      for (std::uint32_t e = st.offsets[c]; e < st.offsets[c + 1]; ++e) {
        const std::uint32_t code = st.entries[e];
        const std::size_t s = code / taps;
        if (fw.denom[s] <= 0.0 || dldh[s] == 0.0) continue;
        g += dldh[s] * st.w[code] * sech2(k * (fw.pred.heights[s] - hc)) / fw.denom[s];
      }
      grad[c] = g;
    }
  }
}

double masked_rmse(const HeightMap& pred, const HeightMap& target) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.heights.size(); ++i) {
    if (!target.valid[i]) continue;
    const double d = pred.heights[i] - target.heights[i];
    s += d * d;
    ++n;
  }
  return n ? std::sqrt(s / n) : 0.0;
}

}  // namespace

FitResult fit_target(const HeightMap& target, const FitConfig& cfg, const FitProgress& progress) {
  cfg.validate();
  if (target.res != cfg.R) throw std::invalid_argument("target resolution differs from cfg.R");
  if (target.valid_count() == 0) throw std::invalid_argument("target height map has no valid cell");
  const auto t0 = std::chrono::steady_clock::now();

  FitResult res;
  res.field = initial_field(target, cfg);
  ZMonoField& field = res.field;
  const Stencil st = build_stencil(field, cfg.R);

  Forward fw{HeightMap(cfg.R, 0.0, true), std::vector<double>(st.base.size(), 0.0)};
  std::vector<double> dldh, grad(field.h.size(), 0.0);
  std::vector<double> m(field.h.size(), 0.0), v2(field.h.size(), 0.0);
  FitReport& rep = res.report;
  rep.steps = cfg.steps;
  double b1t = 1.0, b2t = 1.0;

  for (int step = 0; step < cfg.steps; ++step) {
    forward(st, field, step > 0, fw);
    const LossSnapshot ls = losses(fw, target, cfg, &dldh);
    if (!std::isfinite(ls.total)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step) + " (height " +
                            std::to_string(ls.height) + ", laplacian " + std::to_string(ls.lap) +
                            ", normal " + std::to_string(ls.nrm) + ")");
    }
    rep.height.push_back(ls.height);
    rep.laplacian.push_back(ls.lap);
    rep.normal.push_back(ls.nrm);
    rep.total.push_back(ls.total);
    if (progress) progress(step, ls.total);

    backward(st, field, fw, dldh, grad);
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    const double c1 = 1.0 / (1.0 - b1t), c2 = 1.0 / (1.0 - b2t);
    for (std::size_t c = 0; c < field.h.size(); ++c) {
      m[c] = cfg.beta1 * m[c] + (1.0 - cfg.beta1) * grad[c];
      v2[c] = cfg.beta2 * v2[c] + (1.0 - cfg.beta2) * grad[c] * grad[c];
      const double upd = cfg.lr * (m[c] * c1) / (std::sqrt(v2[c] * c2) + cfg.eps);
      field.h[c] = std::clamp(field.h[c] - upd, -1.0, 1.0);
    }
  }

  forward(st, field, true, fw);
  const LossSnapshot fin = losses(fw, target, cfg, nullptr);
  if (!std::isfinite(fin.total)) throw DivergenceError("non-finite loss after the last step");
  rep.final_total = fin.total;
  rep.final_rmse = masked_rmse(fw.pred, target);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

FitResult fit(const PointCloud& cloud, const FitConfig& cfg, const FitProgress& progress) {
  if (cloud.empty()) throw std::invalid_argument("empty input");
  cfg.validate();
  return fit_target(build_target_heightmap(cloud, cfg.R), cfg, progress);
}

std::vector<TileFit> plan_tiles(const PointCloud& world, int tiles, double overlap) {
  if (world.empty()) throw std::invalid_argument("empty input");
  if (tiles < 1) throw std::invalid_argument("tiles must be >= 1");
  const Bounds3 box = bounds_of(world.points);
  const double dx = (box.max.x - box.min.x) / tiles;
  const double dy = (box.max.y - box.min.y) / tiles;
  std::vector<TileFit> out;
  for (int iy = 0; iy < tiles; ++iy) {
    for (int ix = 0; ix < tiles; ++ix) {
      TileFit t;
      t.ix = ix;
      t.iy = iy;
      // Outer edges take the box bounds exactly so tiles cover the scene.
      t.core.x0 = ix == 0 ? box.min.x : box.min.x + ix * dx;
      t.core.x1 = ix == tiles - 1 ? box.max.x : box.min.x + (ix + 1) * dx;
      t.core.y0 = iy == 0 ? box.min.y : box.min.y + iy * dy;
      t.core.y1 = iy == tiles - 1 ? box.max.y : box.min.y + (iy + 1) * dy;
      const double mx = overlap * dx, my = overlap * dy;
      t.region.x0 = std::max(box.min.x, t.core.x0 - mx);
      t.region.x1 = std::min(box.max.x, t.core.x1 + mx);
      t.region.y0 = std::max(box.min.y, t.core.y0 - my);
      t.region.y1 = std::min(box.max.y, t.core.y1 + my);
      out.push_back(t);
    }
  }
  return out;
}

PointCloud tile_points(const PointCloud& world, const TileFit& tile) {
  PointCloud out;
  out.frame = Frame::World;
  for (const auto& p : world.points) {
    if (tile.region.contains(p.x, p.y)) out.points.push_back(p);
  }
  return out;
}

std::vector<TileFit> fit_tiled(const PointCloud& world, const FitConfig& cfg,
                               const std::function<void(const std::string&)>& log) {
  cfg.validate();
  std::vector<TileFit> tiles = plan_tiles(world, cfg.tiles, cfg.overlap);
  const Bounds3 scene = bounds_of(world.points);
  for (auto& t : tiles) {
    const PointCloud pts = tile_points(world, t);
    t.point_count = pts.size();
    Bounds3 box;
    box.min = {t.region.x0, t.region.y0, scene.min.z};
    box.max = {t.region.x1, t.region.y1, scene.max.z};
    if (!pts.empty()) {
      const Bounds3 b = bounds_of(pts.points);
      box.min.z = b.min.z;
      box.max.z = b.max.z;
    }
    t.transform = normalize_transform_for(box, cfg.padding);

    if (pts.size() < kMinTilePoints) {
      if (log) {
        log("tile (" + std::to_string(t.ix) + ", " + std::to_string(t.iy) + ") has " +
            std::to_string(pts.size()) + " points; using flat ground");
      }
      t.degenerate = true;
      const double ground = std::clamp(t.transform.to_normalized(box.min).z, -1.0, 1.0);
      t.field = ZMonoField(cfg.G, cfg.k, cfg.window, ground);
      continue;
    }
    PointCloud local;
    local.frame = Frame::Normalized;
    local.points.reserve(pts.size());
    for (const auto& p : pts.points) {
      Vec3 q = t.transform.to_normalized(p);
      q.x = std::clamp(q.x, -1.0, 1.0);
      q.y = std::clamp(q.y, -1.0, 1.0);
      q.z = std::clamp(q.z, -1.0, 1.0);
      local.points.push_back(q);
    }
    if (log) {
      log("fitting tile (" + std::to_string(t.ix) + ", " + std::to_string(t.iy) + ") with " +
          std::to_string(pts.size()) + " points");
    }
    FitResult r = fit(local, cfg);
    t.field = std::move(r.field);
    t.report = std::move(r.report);
  }
  return tiles;
}

}  // namespace zmono
