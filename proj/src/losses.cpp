#include "zmono/losses.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace zmono {
namespace {

// Row partial sums reduced in row order keep results independent of the
// thread count.
double ordered_sum(const std::vector<double>& partial) {
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

}  // namespace

LossTerm loss_height(const HeightMap& pred, const HeightMap& target) {
  if (pred.res != target.res) throw std::invalid_argument("height maps differ in resolution");
  const int R = pred.res;
  LossTerm out;
  out.grad.assign(pred.heights.size(), 0.0);
  const double count = static_cast<double>(target.valid_count());
  if (count == 0.0) return out;
  const double inv = 1.0 / count;
  std::vector<double> rows(R, 0.0);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    double s = 0.0;
    for (int u = 0; u < R; ++u) {
      const auto i = pred.index(u, v);
      if (!target.valid[i]) continue;
      const double d = pred.heights[i] - target.heights[i];
      s += std::abs(d);
      out.grad[i] = d > kTieTolerance ? inv : (d < -kTieTolerance ? -inv : 0.0);
    }
    rows[v] = s;
  }
  out.value = ordered_sum(rows) * inv;
  return out;
}

LossTerm loss_laplacian(const HeightMap& pred) {
  const int R = pred.res;
  if (R < 3) throw std::invalid_argument("laplacian loss needs R >= 3");
  const auto& h = pred.heights;
  std::vector<double> resid(h.size(), 0.0);
  std::vector<double> rows(R, 0.0);
#pragma omp parallel for schedule(static)
  for (int v = 1; v < R - 1; ++v) {
    double s = 0.0;
    for (int u = 1; u < R - 1; ++u) {
      const auto i = pred.index(u, v);
      const double r = h[i] - 0.25 * (h[i - 1] + h[i + 1] + h[i - R] + h[i + R]);
      resid[i] = std::abs(r) > kTieTolerance ? r : 0.0;
      s += r * r;
    }
    rows[v] = s;
  }
  const double n = static_cast<double>(R - 2) * (R - 2);
  LossTerm out;
  out.value = ordered_sum(rows) / n;
  out.grad.assign(h.size(), 0.0);
  const double scale = 2.0 / n;
  // resid is zero on the border, so the gather needs no interior test.
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) {
      const auto i = pred.index(u, v);
      double nb = 0.0;
      if (u > 0) nb += resid[i - 1];
      if (u < R - 1) nb += resid[i + 1];
      if (v > 0) nb += resid[i - R];
      if (v < R - 1) nb += resid[i + R];
      out.grad[i] = scale * (resid[i] - 0.25 * nb);
    }
  }
  return out;
}

LossTerm loss_normal_tv(const HeightMap& pred) {
  const int R = pred.res;
  if (R < 3) throw std::invalid_argument("normal loss needs R >= 3");
  const auto& h = pred.heights;
  const double spacing = 2.0 / R;
  const std::size_t N = h.size();

  // Unnormalized normals m = (-gx, -gy, 1) and unit normals n.
  std::vector<std::array<double, 3>> nrm(N);
  std::vector<double> inv_len(N);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    const int vp = std::min(v + 1, R - 1), vm = std::max(v - 1, 0);
    for (int u = 0; u < R; ++u) {
      const int up = std::min(u + 1, R - 1), um = std::max(u - 1, 0);
      const double gx = (h[pred.index(up, v)] - h[pred.index(um, v)]) / (spacing * (up - um));
      const double gy = (h[pred.index(u, vp)] - h[pred.index(u, vm)]) / (spacing * (vp - vm));
      const double il = 1.0 / std::sqrt(gx * gx + gy * gy + 1.0);
      const auto i = pred.index(u, v);
      inv_len[i] = il;
      nrm[i] = {-gx * il, -gy * il, il};
    }
  }

  // Per-pair unit difference vectors e = (n_a - n_b) / ||n_a - n_b||.
  std::vector<std::array<double, 3>> ex(N, {0, 0, 0}), ey(N, {0, 0, 0});
  std::vector<double> rows_x(R, 0.0), rows_y(R, 0.0);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    double sx = 0.0, sy = 0.0;
    for (int u = 0; u < R; ++u) {
      const auto i = pred.index(u, v);
      if (u + 1 < R) {
        const auto j = i + 1;
        const double d0 = nrm[i][0] - nrm[j][0], d1 = nrm[i][1] - nrm[j][1], d2 = nrm[i][2] - nrm[j][2];
        const double len = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
        sx += len;
        if (len > kTieTolerance) ex[i] = {d0 / len, d1 / len, d2 / len};
      }
      if (v + 1 < R) {
        const auto j = i + R;
        const double d0 = nrm[i][0] - nrm[j][0], d1 = nrm[i][1] - nrm[j][1], d2 = nrm[i][2] - nrm[j][2];
        const double len = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
        sy += len;
        if (len > kTieTolerance) ey[i] = {d0 / len, d1 / len, d2 / len};
      }
    }
    rows_x[v] = sx;
    rows_y[v] = sy;
  }
  const double pairs = static_cast<double>(R) * (R - 1);
  LossTerm out;
  out.value = (ordered_sum(rows_x) + ordered_sum(rows_y)) / pairs;

  // dL/dn per cell, then through the normalization to dL/dgx, dL/dgy.
  std::vector<double> dgx(N), dgy(N);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) {
      const auto i = pred.index(u, v);
      std::array<double, 3> dn{0, 0, 0};
      for (int c = 0; c < 3; ++c) {
        dn[c] += ex[i][c] + ey[i][c];
        if (u > 0) dn[c] -= ex[i - 1][c];
        if (v > 0) dn[c] -= ey[i - R][c];
        dn[c] /= pairs;
      }
      // n = m / |m|  =>  dL/dm = (dn - n (n . dn)) / |m|, m = (-gx, -gy, 1)
      const auto& n = nrm[i];
      const double ndot = n[0] * dn[0] + n[1] * dn[1] + n[2] * dn[2];
      dgx[i] = -(dn[0] - n[0] * ndot) * inv_len[i];
      dgy[i] = -(dn[1] - n[1] * ndot) * inv_len[i];
    }
  }

  // gx(u) = (h[up] - h[um]) / (spacing * (up - um)); gather back onto h.
  out.grad.assign(N, 0.0);
  auto coef = [&](int a, int R_) {
    const int ap = std::min(a + 1, R_ - 1), am = std::max(a - 1, 0);
    return 1.0 / (spacing * (ap - am));
  };
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    for (int u = 0; u < R; ++u) {
      const auto i = pred.index(u, v);
      double g = 0.0;
      // Cells whose x-difference uses h(u, v) as the upper sample...
      if (u - 1 >= 0) g += dgx[i - 1] * coef(u - 1, R);
      if (u == R - 1) g += dgx[i] * coef(u, R);
      // ...and as the lower sample.
      if (u + 1 < R) g -= dgx[i + 1] * coef(u + 1, R);
      if (u == 0) g -= dgx[i] * coef(u, R);
      if (v - 1 >= 0) g += dgy[i - R] * coef(v - 1, R);
      if (v == R - 1) g += dgy[i] * coef(v, R);
      if (v + 1 < R) g -= dgy[i + R] * coef(v + 1, R);
      if (v == 0) g -= dgy[i] * coef(v, R);
      out.grad[i] = g;
    }
  }
  return out;
}

}  // namespace zmono
