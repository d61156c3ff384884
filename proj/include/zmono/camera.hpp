#pragma once

#include <array>
#include <string>
#include <vector>

#include "zmono/geom.hpp"

namespace zmono {

// Pinhole camera. Camera axes follow the computer-vision convention: x to
// the image right, y to the image bottom, z along the view direction.
// `rot` holds those three axes in world coordinates as its columns
// (world-from-camera). fov is horizontal; pixels are square.
struct PinholeCamera {
  Vec3 position;
  std::array<double, 9> rot{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  int width = 1;
  int height = 1;
  double fov_deg = 60.0;
  double cx = 0.5, cy = 0.5;  // principal point, pixels

  Vec3 axis(int c) const { return {rot[c], rot[3 + c], rot[6 + c]}; }
  Vec3 right() const { return axis(0); }
  Vec3 down() const { return axis(1); }
  Vec3 forward() const { return axis(2); }
  double focal() const;
  void validate() const;  // throws std::invalid_argument
};

inline constexpr double kNearPlane = 0.1;
inline constexpr double kFarPlane = 1e8;

// Camera at `position` looking along compass `heading_deg` (clockwise from
// +y, i.e. north) tilted `depression_deg` below the horizon. The image
// right axis stays horizontal. Principal point at the image center.
PinholeCamera oriented_camera(const Vec3& position, double heading_deg, double depression_deg, int width,
                              int height, double fov_deg);

// Same camera placed so its optical axis hits `target` from `altitude`
// meters above it.
PinholeCamera aimed_camera(const Vec3& target, double altitude, double heading_deg, double depression_deg,
                           int width, int height, double fov_deg);

// Satellite rotation triples as (pitch, yaw, roll) degrees: yaw is the
// depression below the horizon and roll turns the heading, with roll 0
// facing south. (0, 89, 0) is a 1 degree off-nadir view toward south.
PinholeCamera pyr_camera(const Vec3& target, double altitude, double pitch, double yaw, double roll,
                         int width, int height, double fov_deg);

struct Projection {
  double u = 0.0, v = 0.0, depth = 0.0;
  bool in_front = false;  // depth > near plane
};
Projection project(const PinholeCamera& cam, const Vec3& p);
Vec3 unproject(const PinholeCamera& cam, double u, double v, double depth);
// Unit ray direction through pixel coordinates (u, v).
Vec3 pixel_ray(const PinholeCamera& cam, double u, double v);

// Resolution scaled by s (rounded), same field of view.
PinholeCamera scaled(const PinholeCamera& cam, double s);

double fov_from_gsd(double altitude, double width_px, double gsd);
double gsd_from_fov(double altitude, double width_px, double fov_deg);
double footprint_width(double width_px, double gsd);
double capture_stride(double altitude, double width_px, double gsd, double overlap);

struct CaptureGrid {
  std::vector<PinholeCamera> cameras;
  double stride = 0.0;
  double overlap = 0.0;
  int sites_x = 0, sites_y = 0;
};

struct TrainingGridConfig {
  double altitude = 2000.0;
  int width = 2560;
  int height = 1440;
  double gsd = 0.31;
  double overlap = 0.6;
  double fov_deg = 0.0;    // 0: derive from gsd
  double stride = 317.44;  // 0: derive from overlap
  std::vector<std::array<double, 3>> rotations{{0.0, 89.0, 0.0}, {0.0, 89.0, 90.0}};
};

// Sites on a centered stride grid over `region` (max(1, ceil(extent /
// stride)) per axis), one camera per rotation per site.
CaptureGrid training_grid(const Rect& region, double ground_z, const TrainingGridConfig& cfg);

enum class TestLayout { Line, Grid };

struct TestGridConfig {
  std::vector<double> altitudes{200.0, 500.0};
  int width = 1920;
  int height = 1080;
  double fov_deg = 45.0;
  double depression_deg = 45.0;
  double interval = 45.01;
  double half_extent = 200.0;  // sites span [-h, h] around the region center
  std::vector<double> headings{0.0, 90.0, 180.0, 270.0};
  TestLayout layout = TestLayout::Line;
};

// floor(2h / interval) + 1 sites per line, centered; Line puts them on the
// x axis through the center, Grid on a square lattice.
CaptureGrid test_grid(const Rect& region, double ground_z, const TestGridConfig& cfg);

// Plain-text camera list:
//   zmono-cameras 1
//   <count>
//   cam px py pz qw qx qy qz width height fov_deg cx cy
void write_cameras(const std::vector<PinholeCamera>& cams, const std::string& path);
std::vector<PinholeCamera> read_cameras(const std::string& path);

}  // namespace zmono
