#include "zmono/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zmono {
namespace {

constexpr double kDeg = M_PI / 180.0;

void set_axes(PinholeCamera& c, const Vec3& r, const Vec3& d, const Vec3& f) {
  c.rot = {r.x, d.x, f.x, r.y, d.y, f.y, r.z, d.z, f.z};
}

}  // namespace

double PinholeCamera::focal() const { return 0.5 * width / std::tan(0.5 * fov_deg * kDeg); }

void PinholeCamera::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("camera size must be >= 1 pixel");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw std::invalid_argument("camera fov must lie in (0, 180)");
  if (!position.finite()) throw std::invalid_argument("camera position not finite");
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double d = dot(axis(a), axis(b)) - (a == b ? 1.0 : 0.0);
      if (std::abs(d) > 1e-9) throw std::invalid_argument("camera rotation not orthonormal");
    }
  }
  if (dot(cross(right(), down()), forward()) < 0.0) throw std::invalid_argument("camera rotation is a reflection");
}

PinholeCamera oriented_camera(const Vec3& position, double heading_deg, double depression_deg, int width,
                              int height, double fov_deg) {
  const double h = heading_deg * kDeg, d = depression_deg * kDeg;
  const Vec3 f{std::sin(h) * std::cos(d), std::cos(h) * std::cos(d), -std::sin(d)};
  const Vec3 r{std::cos(h), -std::sin(h), 0.0};
  PinholeCamera c;
  c.position = position;
  set_axes(c, r, cross(f, r), f);
  c.width = width;
  c.height = height;
  c.fov_deg = fov_deg;
  c.cx = 0.5 * width;
  c.cy = 0.5 * height;
  c.validate();
  return c;
}

PinholeCamera aimed_camera(const Vec3& target, double altitude, double heading_deg, double depression_deg,
                           int width, int height, double fov_deg) {
  PinholeCamera c = oriented_camera(target, heading_deg, depression_deg, width, height, fov_deg);
  const double s = std::sin(depression_deg * kDeg);
  if (!(s > 0.0)) throw std::invalid_argument("aimed camera must look downward");
  c.position = target - c.forward() * (altitude / s);
  return c;
}

PinholeCamera pyr_camera(const Vec3& target, double altitude, double pitch, double yaw, double roll, int width,
                         int height, double fov_deg) {
  PinholeCamera c = aimed_camera(target, altitude, 180.0 + roll, yaw, width, height, fov_deg);
  if (pitch != 0.0) {
    // Pitch spins the image about the optical axis.
    const double p = pitch * kDeg;
    const Vec3 r = c.right() * std::cos(p) + c.down() * std::sin(p);
    const Vec3 d = c.down() * std::cos(p) - c.right() * std::sin(p);
    set_axes(c, r, d, c.forward());
  }
  return c;
}

Projection project(const PinholeCamera& cam, const Vec3& p) {
  const Vec3 d = p - cam.position;
  const double x = dot(d, cam.right()), y = dot(d, cam.down()), z = dot(d, cam.forward());
  Projection out;
  out.depth = z;
  out.in_front = z > kNearPlane;
  if (z != 0.0) {
    const double f = cam.focal();
    out.u = f * x / z + cam.cx;
    out.v = f * y / z + cam.cy;
  }
  return out;
}

Vec3 unproject(const PinholeCamera& cam, double u, double v, double depth) {
  const double f = cam.focal();
  const double x = (u - cam.cx) / f * depth, y = (v - cam.cy) / f * depth;
  return cam.position + cam.right() * x + cam.down() * y + cam.forward() * depth;
}

Vec3 pixel_ray(const PinholeCamera& cam, double u, double v) {
  const double f = cam.focal();
  return normalized(cam.right() * ((u - cam.cx) / f) + cam.down() * ((v - cam.cy) / f) + cam.forward());
}

PinholeCamera scaled(const PinholeCamera& cam, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scale must be > 0");
  PinholeCamera c = cam;
  c.width = std::max(1, static_cast<int>(std::lround(cam.width * s)));
  c.height = std::max(1, static_cast<int>(std::lround(cam.height * s)));
  c.cx = cam.cx * c.width / cam.width;
  c.cy = cam.cy * c.height / cam.height;
  return c;
}

double fov_from_gsd(double altitude, double width_px, double gsd) {
  if (!(altitude > 0.0 && width_px > 0.0 && gsd > 0.0)) throw std::invalid_argument("fov_from_gsd needs positive inputs");
  return 2.0 * std::atan(width_px * gsd / (2.0 * altitude)) / kDeg;
}

double gsd_from_fov(double altitude, double width_px, double fov_deg) {
  if (!(altitude > 0.0 && width_px > 0.0 && fov_deg > 0.0 && fov_deg < 180.0)) {
    throw std::invalid_argument("gsd_from_fov needs positive inputs and fov < 180");
  }
  return 2.0 * altitude * std::tan(0.5 * fov_deg * kDeg) / width_px;
}

double footprint_width(double width_px, double gsd) { return width_px * gsd; }

double capture_stride(double altitude, double width_px, double gsd, double overlap) {
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("overlap must lie in [0, 1)");
  if (!(altitude > 0.0 && width_px > 0.0 && gsd > 0.0)) throw std::invalid_argument("capture_stride needs positive inputs");
  return (1.0 - overlap) * footprint_width(width_px, gsd);
}

namespace {

int sites_for(double extent, double stride) {
  if (!(stride > 0.0) || !std::isfinite(stride)) return 1;
  return std::max(1, static_cast<int>(std::ceil(extent / stride - 1e-12)));
}

}  // namespace

CaptureGrid training_grid(const Rect& region, double ground_z, const TrainingGridConfig& cfg) {
  if (!(region.x1 >= region.x0 && region.y1 >= region.y0)) throw std::invalid_argument("empty region");
  const double fov = cfg.fov_deg > 0.0 ? cfg.fov_deg : fov_from_gsd(cfg.altitude, cfg.width, cfg.gsd);
  const double stride = cfg.stride > 0.0 ? cfg.stride : capture_stride(cfg.altitude, cfg.width, cfg.gsd, cfg.overlap);
  CaptureGrid g;
  g.stride = stride;
  g.overlap = cfg.overlap;
  g.sites_x = sites_for(region.width(), stride);
  g.sites_y = sites_for(region.height(), stride);
  const double mx = 0.5 * (region.x0 + region.x1), my = 0.5 * (region.y0 + region.y1);
  for (int j = 0; j < g.sites_y; ++j) {
    for (int i = 0; i < g.sites_x; ++i) {
      const double fx = g.sites_x == 1 ? 0.0 : (i - 0.5 * (g.sites_x - 1)) * stride;
      const double fy = g.sites_y == 1 ? 0.0 : (j - 0.5 * (g.sites_y - 1)) * stride;
      const Vec3 site{mx + fx, my + fy, ground_z};
      for (const auto& r : cfg.rotations) {
        g.cameras.push_back(pyr_camera(site, cfg.altitude, r[0], r[1], r[2], cfg.width, cfg.height, fov));
      }
    }
  }
  return g;
}

CaptureGrid test_grid(const Rect& region, double ground_z, const TestGridConfig& cfg) {
  if (!(region.x1 >= region.x0 && region.y1 >= region.y0)) throw std::invalid_argument("empty region");
  if (!(cfg.interval > 0.0) || cfg.half_extent < 0.0) throw std::invalid_argument("bad test grid spacing");
  const int n = static_cast<int>(std::floor(2.0 * cfg.half_extent / cfg.interval + 1e-9)) + 1;
  const double mx = 0.5 * (region.x0 + region.x1), my = 0.5 * (region.y0 + region.y1);
  std::vector<Vec3> sites;
  const int ny = cfg.layout == TestLayout::Grid ? n : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < n; ++i) {
      const double ox = (i - 0.5 * (n - 1)) * cfg.interval;
      const double oy = ny == 1 ? 0.0 : (j - 0.5 * (n - 1)) * cfg.interval;
      sites.push_back({mx + ox, my + oy, ground_z});
    }
  }
  CaptureGrid g;
  g.stride = cfg.interval;
  g.sites_x = n;
  g.sites_y = ny;
  for (double alt : cfg.altitudes) {
    for (const auto& s : sites) {
      for (double h : cfg.headings) {
        g.cameras.push_back(aimed_camera(s, alt, h, cfg.depression_deg, cfg.width, cfg.height, cfg.fov_deg));
      }
    }
  }
  return g;
}

void write_cameras(const std::vector<PinholeCamera>& cams, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "zmono-cameras 1\n" << cams.size() << "\n";
  char buf[512];
  for (const auto& c : cams) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) m(r, k) = c.rot[r * 3 + k];
    }
    const Eigen::Quaterniond q(m);
    std::snprintf(buf, sizeof buf, "cam %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d %d %.17g %.17g %.17g\n",
                  c.position.x, c.position.y, c.position.z, q.w(), q.x(), q.y(), q.z(), c.width, c.height,
                  c.fov_deg, c.cx, c.cy);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<PinholeCamera> read_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  in >> magic >> version >> count;
  if (!in || magic != "zmono-cameras") throw std::runtime_error(path + ": not a camera file");
  if (version != 1) throw std::runtime_error(path + ": unsupported camera file version " + std::to_string(version));
  std::vector<PinholeCamera> cams;
  for (std::size_t i = 0; i < count; ++i) {
    std::string tag;
    double w, x, y, z;
    PinholeCamera c;
    in >> tag >> c.position.x >> c.position.y >> c.position.z >> w >> x >> y >> z >> c.width >> c.height >> c.fov_deg >>
        c.cx >> c.cy;
    if (!in || tag != "cam") throw std::runtime_error(path + ": bad camera record " + std::to_string(i));
    const Eigen::Matrix3d m = Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c.rot[r * 3 + k] = m(r, k);
    }
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

}  // namespace zmono
