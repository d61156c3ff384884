#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "zmono/geom.hpp"

namespace zt {

namespace fs = std::filesystem;

// Removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("zmono_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Closed axis-aligned box, outward normals.
inline zmono::TriMesh box_mesh(const zmono::Vec3& lo, const zmono::Vec3& hi) {
  zmono::TriMesh m;
  for (int k = 0; k < 8; ++k)
    m.vertices.push_back({(k & 1) ? hi.x : lo.x, (k & 2) ? hi.y : lo.y, (k & 4) ? hi.z : lo.z});
  const std::uint32_t f[12][3] = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                  {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  for (auto& t : f) m.triangles.push_back({t[0], t[1], t[2]});
  return m;
}

// Square in the plane z = c spanning [x0, x1] x [y0, y1], facing up.
inline zmono::TriMesh quad_mesh(double x0, double y0, double x1, double y1, double c) {
  zmono::TriMesh m;
  m.vertices = {{x0, y0, c}, {x1, y0, c}, {x1, y1, c}, {x0, y1, c}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

inline zmono::PointCloud random_cloud(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  zmono::PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(rng), u(rng), u(rng)});
  return c;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace zt
