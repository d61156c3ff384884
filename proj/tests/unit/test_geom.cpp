#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "zmono/geom.hpp"

using namespace zmono;

TEST_CASE("single point maps to the origin") {
  PointCloud c;
  c.points = {{5, 5, 5}};
  auto [n, t] = normalize_cloud(c, 0.0);
  CHECK(n.points[0].x == 0.0);
  CHECK(n.points[0].y == 0.0);
  CHECK(n.points[0].z == 0.0);
  CHECK(n.frame == Frame::Normalized);
  auto back = denormalize(n, t);
  CHECK(back.points[0] == Vec3{5, 5, 5});
}

TEST_CASE("cube corners map onto the unit cube") {
  PointCloud c;
  for (int k = 0; k < 8; ++k) c.points.push_back({(k & 1) ? 10.0 : 0.0, (k & 2) ? 10.0 : 0.0, (k & 4) ? 10.0 : 0.0});
  auto [n, t] = normalize_cloud(c, 0.0);
  for (int k = 0; k < 8; ++k) {
    CHECK(n.points[k].x == doctest::Approx((k & 1) ? 1.0 : -1.0).epsilon(1e-15));
    CHECK(n.points[k].y == doctest::Approx((k & 2) ? 1.0 : -1.0).epsilon(1e-15));
    CHECK(n.points[k].z == doctest::Approx((k & 4) ? 1.0 : -1.0).epsilon(1e-15));
  }
}

TEST_CASE("x and y share a scale, z gets its own") {
  PointCloud c;
  c.points = {{0, 0, 0}, {100, 50, 4}};
  auto [n, t] = normalize_cloud(c, 0.0);
  CHECK(t.scale_xy == doctest::Approx(2.0 / 100.0));
  CHECK(t.scale_z == doctest::Approx(2.0 / 4.0));
  CHECK(n.points[1].x == doctest::Approx(1.0));
  CHECK(n.points[1].y == doctest::Approx(0.5));  // shorter axis stays centred
  CHECK(n.points[0].y == doctest::Approx(-0.5));
  CHECK(n.points[1].z == doctest::Approx(1.0));
}

TEST_CASE("round trip and bounds on random clouds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PointCloud c = zt::random_cloud(100, seed, -3000.0, 7000.0);
    for (auto& p : c.points) p.z *= 0.01;
    for (double pad : {0.0, 0.05, 0.25}) {
      auto [n, t] = normalize_cloud(c, pad);
      const double lim = 1.0 - 2.0 * pad;
      for (const auto& p : n.points) {
        CHECK(std::abs(p.x) <= lim + 1e-12);
        CHECK(std::abs(p.y) <= lim + 1e-12);
        CHECK(std::abs(p.z) <= lim + 1e-12);
      }
      auto back = denormalize(n, t);
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double scale = std::max(1.0, norm(c.points[i]));
        CHECK(norm(back.points[i] - c.points[i]) / scale < 1e-9);
      }
    }
  }
}

TEST_CASE("normalize errors") {
  CHECK_THROWS_WITH_AS(normalize_cloud(PointCloud{}, 0.0), "empty input", std::invalid_argument);
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 1, 1}, {0, NAN, 0}};
  CHECK_THROWS_WITH_AS(normalize_cloud(c, 0.0), doctest::Contains("point 2"), std::invalid_argument);
  c.points.pop_back();
  CHECK_THROWS_AS(normalize_cloud(c, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(normalize_cloud(c, -0.1), std::invalid_argument);
}

TEST_CASE("mesh normalize and denormalize agree with the cloud transform") {
  TriMesh m = zt::box_mesh({-20, 5, 0}, {40, 30, 12});
  PointCloud c;
  c.points = m.vertices;
  auto [n, t] = normalize_cloud(c, 0.05);
  TriMesh nm = normalize(m, t);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK(norm(nm.vertices[i] - n.points[i]) < 1e-15);
  TriMesh back = denormalize(nm, t);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK(norm(back.vertices[i] - m.vertices[i]) < 1e-12);
  CHECK(back.triangles == m.triangles);
}

TEST_CASE("mesh validation") {
  TriMesh m = zt::box_mesh({0, 0, 0}, {1, 1, 1});
  CHECK_NOTHROW(m.validate());
  CHECK(m.total_area() == doctest::Approx(6.0));
  m.triangles.push_back({0, 1, 8});
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.triangles.pop_back();
  m.uvs.resize(3);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
