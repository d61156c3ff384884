#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "zmono/camera.hpp"
#include "zmono/geom.hpp"
#include "zmono/image.hpp"

namespace zmono {

using Color = std::array<float, 3>;

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double roof = 0;
  Color color{0.7f, 0.7f, 0.7f};
  bool checker = false;  // roof pattern
};

struct BoxCity {
  double ground = 0.0;
  Rect bounds{-500, -500, 500, 500};
  std::vector<Box> boxes;
  std::uint64_t seed = 0;
};

struct CityParams {
  int count = 20;
  Rect bounds{-500, -500, 500, 500};
  double ground = 0.0;
  double min_size = 30.0, max_size = 120.0;  // footprint side, m
  double min_height = 10.0, max_height = 80.0;
  double gap = 10.0;    // minimum clearance between footprints and to the bounds (> 0)
  int max_attempts = 20000;
};

// Rejection-sampled boxes, pairwise separated by at least `gap`.
// Throws when `count` boxes do not fit within max_attempts.
BoxCity gen_city(const CityParams& params, std::uint64_t seed);

double gt_height(const BoxCity& city, double x, double y);

// Extruded boxes on a ground plate over the scene bounds, closed below at
// ground - 2% of the scene width.
TriMesh gt_mesh(const BoxCity& city);

struct MvsSamplingProfile {
  double roof_density = 1.0;    // points per m^2
  double ground_density = 1.0;
  double facade_density = 0.0;
  double noise_sigma = 0.0;     // m, along z
  double dropout = 0.0;         // fraction of points removed
  double outlier_fraction = 0.0;  // extra points lifted above the surface
};

// Poisson point counts per surface, one seeded stream per surface.
PointCloud sample_mvs(const BoxCity& city, const MvsSamplingProfile& profile, std::uint64_t seed);

// Procedural ground-truth surface color at a world point with face normal n.
Color gt_color(const BoxCity& city, const Vec3& p, const Vec3& n);

std::vector<RgbImage> render_gt_views(const BoxCity& city, const std::vector<PinholeCamera>& cameras,
                                      Color background = {0.f, 0.f, 0.f});

// Plain-text scene file:
//   zmono-scene 1
//   seed <n>
//   ground <z>
//   bounds <x0> <y0> <x1> <y1>
//   box <x0> <y0> <x1> <y1> <roof> <r> <g> <b> <checker 0|1>
void write_scene(const BoxCity& city, const std::string& path);
BoxCity read_scene(const std::string& path);

}  // namespace zmono
