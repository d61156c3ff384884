#include "zmono/geom.hpp"

#include <algorithm>
#include <limits>

namespace zmono {

Vec3 TriMesh::normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  return cross(vertices[tri[1]] - a, vertices[tri[2]] - a);
}

double TriMesh::area(std::size_t t) const { return 0.5 * norm(normal(t)); }

double TriMesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) s += area(t);
  return s;
}

void TriMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto i : triangles[t]) {
      if (i >= n) {
        throw std::invalid_argument("triangle " + std::to_string(t) + " references vertex " +
                                    std::to_string(i) + " of " + std::to_string(n));
      }
    }
  }
  if (!uvs.empty() && uvs.size() != n) {
    throw std::invalid_argument("uv count " + std::to_string(uvs.size()) + " != vertex count " +
                                std::to_string(n));
  }
}

void Bounds3::extend(const Vec3& p) {
  min.x = std::min(min.x, p.x);
  min.y = std::min(min.y, p.y);
  min.z = std::min(min.z, p.z);
  max.x = std::max(max.x, p.x);
  max.y = std::max(max.y, p.y);
  max.z = std::max(max.z, p.z);
}

Bounds3 bounds_of(std::span<const Vec3> points) {
  Bounds3 b;
  for (const auto& p : points) b.extend(p);
  return b;
}

NormalizeTransform normalize_transform_for(const Bounds3& box, double padding) {
  if (!(padding >= 0.0 && padding < 0.5)) {
    throw std::invalid_argument("padding must lie in [0, 0.5), got " + std::to_string(padding));
  }
  const double half_range = 1.0 - 2.0 * padding;
  const Vec3 c = box.center();
  const Vec3 e = box.extent();

  NormalizeTransform t;
  t.offset = c;
  const double xy = std::max(e.x, e.y);
  t.scale_xy = xy > 0.0 ? 2.0 * half_range / xy : 1.0;
  t.scale_z = e.z > 0.0 ? 2.0 * half_range / e.z : 1.0;
  return t;
}

std::pair<PointCloud, NormalizeTransform> normalize_cloud(const PointCloud& cloud, double padding) {
  if (cloud.empty()) throw std::invalid_argument("empty input");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.points[i].finite()) {
      throw std::invalid_argument("non-finite coordinate at point " + std::to_string(i));
    }
  }
  const NormalizeTransform t = normalize_transform_for(bounds_of(cloud.points), padding);
  PointCloud out;
  out.frame = Frame::Normalized;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    Vec3 q = t.to_normalized(p);
    // Rounding can push an extreme point a hair past the unit cube.
    q.x = std::clamp(q.x, -1.0, 1.0);
    q.y = std::clamp(q.y, -1.0, 1.0);
    q.z = std::clamp(q.z, -1.0, 1.0);
    out.points.push_back(q);
  }
  return {std::move(out), t};
}

PointCloud denormalize(const PointCloud& cloud, const NormalizeTransform& t) {
  PointCloud out;
  out.frame = Frame::World;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(t.to_world(p));
  return out;
}

TriMesh denormalize(const TriMesh& mesh, const NormalizeTransform& t) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = t.to_world(v);
  return out;
}

TriMesh normalize(const TriMesh& mesh, const NormalizeTransform& t) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = t.to_normalized(v);
  return out;
}

}  // namespace zmono
