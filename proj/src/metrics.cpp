#include "zmono/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "zmono/kdtree.hpp"

namespace zmono {
namespace {

double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

PointCloud sample_mesh(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  mesh.validate();
  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.area(t);
    cdf[t] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("mesh has no area to sample");
  std::mt19937_64 rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = unit_double(rng) * total;
    auto t = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    t = std::min(t, cdf.size() - 1);
    while (mesh.area(t) == 0.0 && t + 1 < cdf.size()) ++t;
    const double s = std::sqrt(unit_double(rng)), w = unit_double(rng);
    const auto& tri = mesh.triangles[t];
    out.points.push_back(mesh.vertices[tri[0]] * (1.0 - s) + mesh.vertices[tri[1]] * (s * (1.0 - w)) +
                         mesh.vertices[tri[2]] * (s * w));
  }
  return out;
}

std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to) {
  if (from.empty() || to.empty()) throw std::invalid_argument("nearest distances need nonempty clouds");
  const KdTree tree(to.points);
  std::vector<double> d(from.size());
  const auto n = static_cast<std::int64_t>(from.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] = std::sqrt(tree.nearest(from.points[i]).dist2);
  return d;
}

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double share_within(const std::vector<double>& d, double tau) {
  const auto k = std::count_if(d.begin(), d.end(), [&](double x) { return x <= tau; });
  return static_cast<double>(k) / d.size();
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  return mean(nearest_distances(a, b)) + mean(nearest_distances(b, a));
}

GeoMetricReport prf(const PointCloud& pred, const PointCloud& gt, double d_tau) {
  if (!(d_tau > 0.0)) throw std::invalid_argument("d_tau must be > 0");
  const auto dp = nearest_distances(pred, gt);
  const auto dg = nearest_distances(gt, pred);
  GeoMetricReport r;
  r.d_tau = d_tau;
  r.pred_count = pred.size();
  r.gt_count = gt.size();
  r.precision = share_within(dp, d_tau);
  r.recall = share_within(dg, d_tau);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.chamfer = mean(dp) + mean(dg);
  return r;
}

std::string GeoMetricReport::to_json() const {
  nlohmann::json j{{"precision", precision}, {"recall", recall},       {"f1", f1},
                   {"chamfer", chamfer},     {"d_tau", d_tau},         {"pred_count", pred_count},
                   {"gt_count", gt_count},   {"chamfer_convention", kChamferConvention},
                   {"frame", "normalized"}};
  return j.dump(1);
}

namespace {

void check_same_size(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("images differ in size");
  if (mask && mask->size() != a.pixel_count()) throw std::invalid_argument("mask size differs from image size");
}

}  // namespace

double psnr(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask) {
  check_same_size(a, b, mask);
  double se = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (mask && !(*mask)[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = static_cast<double>(a.data[3 * p + c]) - b.data[3 * p + c];
      se += d * d;
    }
    n += 3;
  }
  if (n == 0) throw std::invalid_argument("psnr over an empty mask");
  const double mse = se / n;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> g;
  double s = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double x = i - kHalf;
    g[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    s += g[i];
  }
  for (double& v : g) v /= s;
  return g;
}

// Separable valid-region filter: output (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, const std::array<double, kWin>& g) {
  const int ow = w - 2 * kHalf, oh = h - 2 * kHalf;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * img[static_cast<std::size_t>(y) * w + x + k];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask) {
  check_same_size(a, b, mask);
  const int w = a.width, h = a.height;
  if (w < kWin || h < kWin) throw std::invalid_argument("ssim needs images of at least 11 x 11");
  const int ow = w - 2 * kHalf, oh = h - 2 * kHalf;
  // Window centers whose window lies fully inside the mask.
  std::vector<std::uint8_t> center(static_cast<std::size_t>(ow) * oh, 1);
  if (mask) {
    std::vector<std::int64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] = ((*mask)[static_cast<std::size_t>(y) * w + x] ? 1 : 0) +
                                                                 sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] +
                                                                 sat[static_cast<std::size_t>(y + 1) * (w + 1) + x] -
                                                                 sat[static_cast<std::size_t>(y) * (w + 1) + x];
      }
    }
    auto S = [&](int x, int y) { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const auto cnt = S(x + kWin, y + kWin) - S(x, y + kWin) - S(x + kWin, y) + S(x, y);
        center[static_cast<std::size_t>(y) * ow + x] = cnt == kWin * kWin;
      }
    }
  }
  const std::size_t centers = static_cast<std::size_t>(std::count(center.begin(), center.end(), 1));
  if (centers == 0) throw std::invalid_argument("ssim: no full window inside the mask");

  const auto g = gaussian_window();
  constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  double total = 0.0;
  const std::size_t N = a.pixel_count();
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(N), y(N), xx(N), yy(N), xy(N);
    for (std::size_t p = 0; p < N; ++p) {
      x[p] = a.data[3 * p + c];
      y[p] = b.data[3 * p + c];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, w, h, g), my = filter_valid(y, w, h, g);
    const auto sxx = filter_valid(xx, w, h, g), syy = filter_valid(yy, w, h, g), sxy = filter_valid(xy, w, h, g);
    double s = 0.0;
    for (std::size_t p = 0; p < center.size(); ++p) {
      if (!center[p]) continue;
      const double vx = sxx[p] - mx[p] * mx[p], vy = syy[p] - my[p] * my[p], cxy = sxy[p] - mx[p] * my[p];
      s += ((2 * mx[p] * my[p] + C1) * (2 * cxy + C2)) / ((mx[p] * mx[p] + my[p] * my[p] + C1) * (vx + vy + C2));
    }
    total += s / centers;
  }
  return total / 3.0;
}

std::vector<std::uint8_t> border_mask(int width, int height, int border) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(width) * height, 0);
  for (int y = border; y < height - border; ++y) {
    for (int x = border; x < width - border; ++x) m[static_cast<std::size_t>(y) * width + x] = 1;
  }
  return m;
}

double ImgMetricReport::psnr_table() const { return std::isfinite(psnr) ? psnr : kPsnrSentinel; }

std::string ImgMetricReport::to_json() const {
  nlohmann::json j{{"psnr", psnr_table()}, {"psnr_infinite", !std::isfinite(psnr)}, {"ssim", ssim}, {"masked", masked}};
  return j.dump(1);
}

ImgMetricReport image_metrics(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask) {
  ImgMetricReport r;
  r.psnr = psnr(a, b, mask);
  r.ssim = ssim(a, b, mask);
  r.masked = mask != nullptr;
  return r;
}

}  // namespace zmono
