#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Coordinate convention: right-handed, +z up. World units are meters.
// The normalized frame maps a scene into [-1, 1]^3.

namespace zmono {

struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  bool operator==(const Vec2&) const = default;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : a;
}

enum class Frame { World, Normalized };

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::World;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Vec2> uvs;  // empty, or one per vertex

  bool has_uvs() const { return !uvs.empty(); }
  Vec3 normal(std::size_t t) const;  // unnormalized (2 * area * unit normal)
  double area(std::size_t t) const;
  double total_area() const;
  void validate() const;  // throws std::invalid_argument
};

struct Bounds3 {
  Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  void extend(const Vec3& p);
  bool empty() const { return min.x > max.x; }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
};

Bounds3 bounds_of(std::span<const Vec3> points);

// Axis-aligned xy rectangle, boundaries inclusive.
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

// world = offset + normalized / scale, per axis. x and y share one scale.
struct NormalizeTransform {
  double scale_xy = 1.0;
  double scale_z = 1.0;
  Vec3 offset;

  Vec3 to_normalized(const Vec3& w) const {
    return {(w.x - offset.x) * scale_xy, (w.y - offset.y) * scale_xy, (w.z - offset.z) * scale_z};
  }
  Vec3 to_world(const Vec3& n) const {
    return {n.x / scale_xy + offset.x, n.y / scale_xy + offset.y, n.z / scale_z + offset.z};
  }
};

// Maps the cloud's bounding box into [-1 + 2p, 1 - 2p]^3. x and y share a
// scale so the ground plane keeps its aspect; z gets its own. Zero-extent
// axes map to 0 with unit scale.
std::pair<PointCloud, NormalizeTransform> normalize_cloud(const PointCloud& cloud, double padding);

// Same mapping built from a bounding box alone.
NormalizeTransform normalize_transform_for(const Bounds3& box, double padding);

PointCloud denormalize(const PointCloud& cloud, const NormalizeTransform& t);
TriMesh denormalize(const TriMesh& mesh, const NormalizeTransform& t);
TriMesh normalize(const TriMesh& mesh, const NormalizeTransform& t);

}  // namespace zmono
