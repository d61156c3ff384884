#include <cmath>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "helpers.hpp"
#include "zmono/mesh.hpp"
#include "zmono/raster.hpp"
#include "zmono/synth.hpp"

using namespace zmono;

namespace {

bool overlap(const Box& a, const Box& b) { return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1; }

BoxCity one_box(Color c) {
  BoxCity city;
  city.bounds = {-100, -100, 100, 100};
  Box b;
  b.x0 = -30, b.y0 = -20, b.x1 = 30, b.y1 = 25, b.roof = 40, b.color = c;
  city.boxes.push_back(b);
  return city;
}

}  // namespace

TEST_CASE("empty city is flat ground") {
  CityParams p;
  p.count = 0;
  p.ground = 7.5;
  BoxCity c = gen_city(p, 1);
  CHECK(c.boxes.empty());
  CHECK(gt_height(c, 12, -40) == 7.5);
  TriMesh m = gt_mesh(c);
  CHECK(watertight_check(m).watertight());
  for (const auto& v : m.vertices) CHECK(v.z <= 7.5);
}

TEST_CASE("fifty boxes never overlap") {
  CityParams p;
  p.count = 50;
  p.min_size = 20;
  p.max_size = 60;
  BoxCity c = gen_city(p, 3);
  REQUIRE(c.boxes.size() == 50);
  for (std::size_t i = 0; i < c.boxes.size(); ++i) {
    const Box& a = c.boxes[i];
    CHECK(a.roof > c.ground);
    CHECK(a.x0 >= p.bounds.x0);
    CHECK(a.y1 <= p.bounds.y1);
    for (std::size_t j = i + 1; j < c.boxes.size(); ++j) CHECK_FALSE(overlap(a, c.boxes[j]));
  }

  CityParams crowded = p;
  crowded.count = 500;
  crowded.max_attempts = 2000;
  CHECK_THROWS_AS(gen_city(crowded, 1), std::runtime_error);
  CityParams bad = p;
  bad.gap = 0.0;
  CHECK_THROWS_AS(gen_city(bad, 1), std::invalid_argument);
}

TEST_CASE("cities are deterministic per seed") {
  CityParams p;
  BoxCity a = gen_city(p, 11), b = gen_city(p, 11), c = gen_city(p, 12);
  REQUIRE(a.boxes.size() == b.boxes.size());
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    CHECK(a.boxes[i].x0 == b.boxes[i].x0);
    CHECK(a.boxes[i].roof == b.boxes[i].roof);
    CHECK(a.boxes[i].color == b.boxes[i].color);
  }
  CHECK(a.boxes[0].x0 != c.boxes[0].x0);
}

TEST_CASE("ground truth height") {
  BoxCity c = one_box({1, 0, 0});
  CHECK(gt_height(c, 0, 0) == 40);
  CHECK(gt_height(c, 30, 25) == 40);
  CHECK(gt_height(c, 31, 0) == 0);
  CHECK(gt_height(c, -90, 90) == 0);
}

TEST_CASE("ground truth mesh is closed") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    CityParams p;
    p.count = 15;
    BoxCity c = gen_city(p, 100 + s);
    TriMesh m = gt_mesh(c);
    const WatertightReport r = watertight_check(m);
    CHECK(r.watertight());
    CHECK(r.components == 1);
    double lo = 1e300;
    for (const auto& v : m.vertices) lo = std::min(lo, v.z);
    CHECK(lo == doctest::Approx(c.ground - 0.02 * 1000.0));
  }
}

TEST_CASE("mvs sampling") {
  CityParams p;
  p.count = 12;
  BoxCity c = gen_city(p, 21);
  MvsSamplingProfile prof;
  prof.roof_density = 0.3;
  prof.ground_density = 0.2;
  PointCloud a = sample_mvs(c, prof, 4), b = sample_mvs(c, prof, 4);
  CHECK(a.points == b.points);

  // Counts: each surface draws Poisson(d A).
  double roof_area = 0.0;
  for (const auto& box : c.boxes) roof_area += (box.x1 - box.x0) * (box.y1 - box.y0);
  const double ground_area = c.bounds.width() * c.bounds.height() - roof_area;
  std::size_t roof_pts = 0, ground_pts = 0, other = 0;
  for (const auto& q : a.points) {
    if (q.z == c.ground) {
      ++ground_pts;
      continue;
    }
    ++roof_pts;
    other += std::abs(gt_height(c, q.x, q.y) - q.z) > 0.0;  // sigma 0: exactly on the roof
  }
  CHECK(other == 0);
  const double er = prof.roof_density * roof_area, eg = prof.ground_density * ground_area;
  CHECK(std::abs(roof_pts - er) < 4 * std::sqrt(er));
  CHECK(std::abs(ground_pts - eg) < 4 * std::sqrt(eg));

  // No facade density: nothing strictly between ground and roof near any footprint edge.
  for (const auto& q : a.points)
    for (const auto& box : c.boxes) {
      const bool band = q.x > box.x0 - 0.5 && q.x < box.x1 + 0.5 && q.y > box.y0 - 0.5 && q.y < box.y1 + 0.5 &&
                        !(q.x > box.x0 + 0.5 && q.x < box.x1 - 0.5 && q.y > box.y0 + 0.5 && q.y < box.y1 - 0.5);
      if (band) CHECK_FALSE((q.z > c.ground && q.z < box.roof));
    }

  MvsSamplingProfile fac = prof;
  fac.facade_density = 0.5;
  std::size_t walls = 0;
  for (const auto& q : sample_mvs(c, fac, 4).points) walls += q.z > c.ground && q.z < gt_height(c, q.x, q.y);
  CHECK(walls > 0);

  MvsSamplingProfile noisy = prof;
  noisy.noise_sigma = 0.2;
  noisy.dropout = 0.5;
  PointCloud n = sample_mvs(c, noisy, 4);
  CHECK(n.size() < a.size());
  CHECK(std::abs(n.size() - 0.5 * a.size()) < 4 * std::sqrt(0.25 * a.size()));

  MvsSamplingProfile out = prof;
  out.outlier_fraction = 0.01;
  CHECK(sample_mvs(c, out, 4).size() == a.size() + static_cast<std::size_t>(std::llround(0.01 * a.size())));

  MvsSamplingProfile bad = prof;
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(sample_mvs(c, bad, 1), std::invalid_argument);
}

TEST_CASE("nadir view of a red roof") {
  BoxCity c = one_box({1.0f, 0.0f, 0.0f});
  PinholeCamera cam = oriented_camera({0, 0, 500}, 0.0, 90.0, 200, 200, 30.0);
  auto views = render_gt_views(c, {cam, cam});
  CHECK(views.size() == 2);
  const float* px = views[0].at(100, 100);
  CHECK(px[0] == 1.0f);
  CHECK(px[1] == 0.0f);
  CHECK(px[2] == 0.0f);
  CHECK(views[0].data == views[1].data);
}

TEST_CASE("rendered heights match the height function") {
  CityParams p;
  p.count = 10;
  p.bounds = {-200, -200, 200, 200};
  BoxCity c = gen_city(p, 8);
  TriMesh m = gt_mesh(c);
  PinholeCamera cam = oriented_camera({0, 0, 3000}, 0.0, 90.0, 256, 256, 8.0);
  FrameBuffer fb = rasterize(m, cam);
  GrayImage h = height_channel(fb, m, -1e9f);
  std::size_t checked = 0, bad = 0;
  for (int y = 1; y < 255; ++y)
    for (int x = 1; x < 255; ++x) {
      bool edge = false;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) edge |= h.at(x + i, y + j) != h.at(x, y);
      if (edge || h.at(x, y) < -1e8f) continue;
      const Vec3 d = pixel_ray(cam, x + 0.5, y + 0.5);
      const Vec3 q = cam.position + d * ((h.at(x, y) - cam.position.z) / d.z);
      ++checked;
      bad += std::abs(gt_height(c, q.x, q.y) - h.at(x, y)) > 1e-3;
    }
  CHECK(checked > 254 * 254 / 2);  // most of the frame, not a sliver
  CHECK(bad == 0);
}

TEST_CASE("scene file round trip") {
  zt::TempDir dir("scene");
  CityParams p;
  p.count = 9;
  p.ground = -3.25;
  BoxCity c = gen_city(p, 77);
  write_scene(c, dir / "s.txt");
  BoxCity back = read_scene(dir / "s.txt");
  CHECK(back.seed == 77);
  CHECK(back.ground == c.ground);
  CHECK(back.bounds.x1 == c.bounds.x1);
  REQUIRE(back.boxes.size() == c.boxes.size());
  for (std::size_t i = 0; i < c.boxes.size(); ++i) {
    CHECK(back.boxes[i].x0 == c.boxes[i].x0);
    CHECK(back.boxes[i].y1 == c.boxes[i].y1);
    CHECK(back.boxes[i].roof == c.boxes[i].roof);
    CHECK(back.boxes[i].color == c.boxes[i].color);
    CHECK(back.boxes[i].checker == c.boxes[i].checker);
  }
  write_scene(back, dir / "t.txt");
  std::ifstream a(dir / "s.txt"), b(dir / "t.txt");
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));
  std::ofstream(dir / "bad.txt") << "zmono-scene 1\nbox 1 2 3\n";
  CHECK_THROWS(read_scene(dir / "bad.txt"));
}
