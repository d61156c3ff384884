#include "reference/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zmono::ref {

double height_of(const ZMonoField& field, double x, double y) {
  const NeighborWeights nw = neighbor_weights(field, x, y);
  auto f = [&](double z) { return eval_curve(field, nw, z).f; };
  if (f(-1.0) > 0.0) return -1.0;
  if (f(1.0) < 0.0) return 1.0;
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

HeightMap height_grid(const ZMonoField& field, int R) {
  HeightMap out(R, 0.0, true);
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) out.at(u, v) = ref::height_of(field, out.cell_center(u), out.cell_center(v));
  }
  return out;
}

VoxelGrid sample_sdf(const ZMonoField& field, int res) {
  VoxelGrid g;
  g.res = res;
  g.values.resize(static_cast<std::size_t>(res) * res * res);
  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) g.values[g.index(i, j, k)] = eval_sdf(field, g.position(i, j, k));
    }
  }
  return g;
}

LossTerm loss_height(const HeightMap& pred, const HeightMap& target) {
  LossTerm out;
  out.grad.assign(pred.heights.size(), 0.0);
  const double n = static_cast<double>(target.valid_count());
  if (n == 0.0) return out;
  for (std::size_t i = 0; i < pred.heights.size(); ++i) {
    if (!target.valid[i]) continue;
    const double d = pred.heights[i] - target.heights[i];
    out.value += std::abs(d) / n;
    if (std::abs(d) > kTieTolerance) out.grad[i] = (d > 0.0 ? 1.0 : -1.0) / n;
  }
  return out;
}

LossTerm loss_laplacian(const HeightMap& pred) {
  const int R = pred.res;
  const double n = static_cast<double>(R - 2) * (R - 2);
  LossTerm out;
  out.grad.assign(pred.heights.size(), 0.0);
  for (int v = 1; v < R - 1; ++v) {
    for (int u = 1; u < R - 1; ++u) {
      const std::array<std::size_t, 4> nb{pred.index(u - 1, v), pred.index(u + 1, v), pred.index(u, v - 1),
                                          pred.index(u, v + 1)};
      double mean = 0.0;
      for (auto j : nb) mean += pred.heights[j] / 4.0;
      const double r = pred.at(u, v) - mean;
      out.value += r * r / n;
      if (std::abs(r) <= kTieTolerance) continue;
      out.grad[pred.index(u, v)] += 2.0 * r / n;
      for (auto j : nb) out.grad[j] -= 2.0 * r / (4.0 * n);
    }
  }
  return out;
}

LossTerm loss_normal_tv(const HeightMap& pred) {
  const int R = pred.res;
  const double sp = 2.0 / R;
  const std::size_t N = pred.heights.size();
  struct Cell {
    int up, um, vp, vm;
    double gx, gy, len;
    std::array<double, 3> n;
  };
  std::vector<Cell> c(N);
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) {
      Cell& k = c[pred.index(u, v)];
      k.up = std::min(u + 1, R - 1);
      k.um = std::max(u - 1, 0);
      k.vp = std::min(v + 1, R - 1);
      k.vm = std::max(v - 1, 0);
      k.gx = (pred.at(k.up, v) - pred.at(k.um, v)) / (sp * (k.up - k.um));
      k.gy = (pred.at(u, k.vp) - pred.at(u, k.vm)) / (sp * (k.vp - k.vm));
      k.len = std::sqrt(k.gx * k.gx + k.gy * k.gy + 1.0);
      k.n = {-k.gx / k.len, -k.gy / k.len, 1.0 / k.len};
    }
  }
  const double pairs = static_cast<double>(R) * (R - 1);
  LossTerm out;
  std::vector<std::array<double, 3>> dn(N, {0, 0, 0});
  auto pair = [&](std::size_t a, std::size_t b) {
    std::array<double, 3> d;
    for (int q = 0; q < 3; ++q) d[q] = c[a].n[q] - c[b].n[q];
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    out.value += len / pairs;
    if (len <= kTieTolerance) return;
    for (int q = 0; q < 3; ++q) {
      dn[a][q] += d[q] / len / pairs;
      dn[b][q] -= d[q] / len / pairs;
    }
  };
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u + 1 < R; ++u) pair(pred.index(u, v), pred.index(u + 1, v));
  }
  for (int v = 0; v + 1 < R; ++v) {
    for (int u = 0; u < R; ++u) pair(pred.index(u, v), pred.index(u, v + 1));
  }
  out.grad.assign(N, 0.0);
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) {
      const Cell& k = c[pred.index(u, v)];
      const auto& g = dn[pred.index(u, v)];
      // m = (-gx, -gy, 1), n = m / |m|
      const double nd = k.n[0] * g[0] + k.n[1] * g[1] + k.n[2] * g[2];
      const double dgx = -(g[0] - k.n[0] * nd) / k.len, dgy = -(g[1] - k.n[1] * nd) / k.len;
      out.grad[pred.index(k.up, v)] += dgx / (sp * (k.up - k.um));
      out.grad[pred.index(k.um, v)] -= dgx / (sp * (k.up - k.um));
      out.grad[pred.index(u, k.vp)] += dgy / (sp * (k.vp - k.vm));
      out.grad[pred.index(u, k.vm)] -= dgy / (sp * (k.vp - k.vm));
    }
  }
  return out;
}

FrameBuffer rasterize(const TriMesh& mesh, const PinholeCamera& cam, const RasterOptions& opt) {
  struct Proj {
    std::array<double, 3> sx, sy, iz;
    double area;
    bool live;
  };
  const double f = cam.focal();
  std::vector<Proj> pr(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Proj& p = pr[t];
    p.live = false;
    const auto& tri = mesh.triangles[t];
    if (opt.cull_backfaces && dot(mesh.normal(t), cam.position - mesh.vertices[tri[0]]) <= 0.0) continue;
    int behind = 0;
    for (int k = 0; k < 3; ++k) {
      const Vec3 d = mesh.vertices[tri[k]] - cam.position;
      const double z = dot(d, cam.forward());
      if (!(z > kNearPlane)) ++behind;
      p.sx[k] = f * dot(d, cam.right()) / z + cam.cx;
      p.sy[k] = f * dot(d, cam.down()) / z + cam.cy;
      p.iz[k] = 1.0 / z;
    }
    if (behind == 3) continue;
    if (behind > 0) throw std::invalid_argument("reference rasterizer does not clip at the near plane");
    p.area = (p.sx[1] - p.sx[0]) * (p.sy[2] - p.sy[0]) - (p.sx[2] - p.sx[0]) * (p.sy[1] - p.sy[0]);
    p.live = p.area != 0.0 && std::isfinite(p.area);
  }
  FrameBuffer fb(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const std::size_t i = fb.index(x, y);
      for (std::size_t t = 0; t < pr.size(); ++t) {
        const Proj& p = pr[t];
        if (!p.live) continue;
        auto edge = [&](int a, int b) { return (p.sx[b] - p.sx[a]) * (py - p.sy[a]) - (p.sy[b] - p.sy[a]) * (px - p.sx[a]); };
        const double b0 = edge(1, 2) / p.area, b1 = edge(2, 0) / p.area, b2 = edge(0, 1) / p.area;
        if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;
        const double iz = b0 * p.iz[0] + b1 * p.iz[1] + b2 * p.iz[2];
        if (!(iz > 0.0)) continue;
        const double depth = 1.0 / iz;
        if (depth < kNearPlane || depth > kFarPlane) continue;
        if (depth < fb.depth[i]) {  // scan order already favors the lower id on ties
          fb.depth[i] = depth;
          fb.tri[i] = static_cast<std::int32_t>(t);
          fb.bary[i] = {static_cast<float>(b0 * p.iz[0] * depth), static_cast<float>(b1 * p.iz[1] * depth),
                        static_cast<float>(b2 * p.iz[2] * depth)};
        }
      }
    }
  }
  return fb;
}

HeightMap ortho_height_raster(const TriMesh& mesh, int R) {
  HeightMap out(R, 0.0, false);
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) {
      const double px = out.cell_center(u), py = out.cell_center(v);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& t : mesh.triangles) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        const double area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if (area == 0.0) continue;
        const double w0 = ((c.x - b.x) * (py - b.y) - (c.y - b.y) * (px - b.x)) / area;
        const double w1 = ((a.x - c.x) * (py - c.y) - (a.y - c.y) * (px - c.x)) / area;
        const double w2 = ((b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)) / area;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        best = std::max(best, w0 * a.z + w1 * b.z + w2 * c.z);
      }
      if (best > -std::numeric_limits<double>::infinity()) {
        out.at(u, v) = best;
        out.valid[out.index(u, v)] = 1;
      }
    }
  }
  return out;
}

std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to) {
  std::vector<double> d(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to.points) {
      const Vec3 e = from.points[i] - q;
      best = std::min(best, dot(e, e));
    }
    d[i] = std::sqrt(best);
  }
  return d;
}

double ssim(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask) {
  constexpr int W = 11, r = 5;
  std::array<double, W> g;
  double gs = 0.0;
  for (int i = 0; i < W; ++i) {
    g[i] = std::exp(-(i - r) * (i - r) / (2.0 * 1.5 * 1.5));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double C1 = 1e-4, C2 = 9e-4;
  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = r; y < a.height - r; ++y) {
      for (int x = r; x < a.width - r; ++x) {
        bool inside = true;
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int dy = -r; dy <= r && inside; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (mask && !(*mask)[static_cast<std::size_t>(y + dy) * a.width + x + dx]) {
              inside = false;
              break;
            }
            const double w = g[dx + r] * g[dy + r];
            const double p = a.at(x + dx, y + dy)[ch], q = b.at(x + dx, y + dy)[ch];
            mx += w * p;
            my += w * q;
            sxx += w * p * p;
            syy += w * q * q;
            sxy += w * p * q;
          }
        }
        if (!inside) continue;
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        sum += ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
        ++count;
      }
    }
    if (count == 0) throw std::invalid_argument("ssim: no full window inside the mask");
    total += sum / count;
  }
  return total / 3.0;
}

}  // namespace zmono::ref
