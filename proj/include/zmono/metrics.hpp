#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zmono/geom.hpp"
#include "zmono/image.hpp"

namespace zmono {

inline constexpr double kDefaultDTau = 0.036;
inline constexpr double kPsnrSentinel = 99.0;  // stands in for +inf in tables

// Area-weighted triangle choice, uniform barycentric point; deterministic per seed.
PointCloud sample_mesh(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

// Distance from every point of `from` to its nearest point in `to` (exact).
std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to);

// mean_a min_b |a - b| + mean_b min_a |a - b|
double chamfer(const PointCloud& a, const PointCloud& b);

struct GeoMetricReport {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double chamfer = 0.0;
  double d_tau = kDefaultDTau;
  std::size_t pred_count = 0, gt_count = 0;
  static constexpr const char* kChamferConvention = "sum of mean nearest-neighbour distances, both directions";
  std::string to_json() const;
};

// Precision: share of pred points with a gt point within d_tau; recall the
// converse. Also fills the chamfer distance.
GeoMetricReport prf(const PointCloud& pred, const PointCloud& gt, double d_tau = kDefaultDTau);

// Mean over masked pixels (mask nonzero) and channels; MAX = 1.
// Identical images give +inf.
double psnr(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask = nullptr);

// 11 x 11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, averaged
// over window centers whose whole window lies inside the image (and the
// mask), then over channels.
double ssim(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask = nullptr);

// Mask that drops a border of `border` pixels.
std::vector<std::uint8_t> border_mask(int width, int height, int border);

struct ImgMetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  bool masked = false;
  double psnr_table() const;  // sentinel in place of +inf
  std::string to_json() const;
};

ImgMetricReport image_metrics(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask = nullptr);

}  // namespace zmono
