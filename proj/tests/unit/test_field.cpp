#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "reference/reference.hpp"
#include "zmono/field.hpp"

using namespace zmono;

namespace {

ZMonoField random_field(int G, std::uint64_t seed, double amp, int window = 3) {
  ZMonoField f(G, kDefaultSharpness, window);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  for (double& h : f.h) h = u(rng);
  return f;
}

NeighborWeights manual(std::initializer_list<std::pair<std::uint32_t, double>> taps) {
  NeighborWeights nw;
  for (auto [c, w] : taps) {
    nw.cells[nw.count] = c;
    nw.w[nw.count] = w;
    ++nw.count;
  }
  return nw;
}

}  // namespace

TEST_CASE("weights sum to one and stay nonnegative") {
  ZMonoField f(32);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int q = 0; q < 1000; ++q) {
    auto nw = neighbor_weights(f, u(rng), u(rng));
    CHECK(nw.count == 9);
    double s = 0.0;
    for (int i = 0; i < nw.count; ++i) {
      CHECK(nw.w[i] >= 0.0);
      s += nw.w[i];
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  for (double c : {-1.0, 1.0}) {
    auto nw = neighbor_weights(f, c, -c);
    CHECK(nw.count == 9);  // window shifted inward, never shrunk
  }
}

TEST_CASE("weight at a cell centre is the window maximum") {
  ZMonoField f(16);
  for (int i : {0, 3, 8, 15}) {
    const double x = f.cell_center(i), y = f.cell_center(15 - i);
    auto nw = neighbor_weights(f, x, y);
    const std::uint32_t own = static_cast<std::uint32_t>((15 - i) * 16 + i);
    double own_w = -1.0, best = -1.0;
    for (int t = 0; t < nw.count; ++t) {
      if (nw.cells[t] == own) own_w = nw.w[t];
      best = std::max(best, nw.w[t]);
    }
    CHECK(own_w == best);
  }
}

TEST_CASE("equidistant query gives equal weights to the four nearest cells") {
  ZMonoField f(8);
  const double x = -1.0 + 4 * 0.25, y = -1.0 + 3 * 0.25;  // shared corner of cells (3..4, 2..3)
  auto nw = neighbor_weights(f, x, y);
  std::vector<double> near;
  for (int t = 0; t < nw.count; ++t) {
    const int i = nw.cells[t] % 8, j = nw.cells[t] / 8;
    if ((i == 3 || i == 4) && (j == 2 || j == 3)) near.push_back(nw.w[t]);
  }
  REQUIRE(near.size() == 4);
  for (double w : near) CHECK(w == doctest::Approx(near[0]).epsilon(1e-12));
  for (int t = 0; t < nw.count; ++t) CHECK(nw.w[t] <= near[0] * (1 + 1e-12));
}

TEST_CASE("out of domain queries throw") {
  ZMonoField f(8);
  CHECK_THROWS_AS(neighbor_weights(f, 1.01, 0.0), std::domain_error);
  CHECK_THROWS_AS(eval_sdf(f, {0, 0, -1.5}), std::domain_error);
  CHECK_THROWS_AS(height_of(f, 0.0, -2.0), std::domain_error);
}

TEST_CASE("single cell reductions") {
  ZMonoField f(4, 80.0, 3, 0.0);
  f.at(1, 1) = 0.3;
  auto one = manual({{1 * 4 + 1, 1.0}});
  CHECK(eval_curve(f, one, 0.3).f == 0.0);
  CHECK(solve_height(f, one).z == doctest::Approx(0.3).epsilon(1e-12));
  f.at(1, 1) = 0.25;
  CHECK(solve_height(f, one).z == doctest::Approx(0.25).epsilon(1e-12));
  f.at(1, 1) = 0.0;
  CHECK(eval_curve(f, one, 0.1).f == doctest::Approx(0.99999977).epsilon(1e-8));
  CHECK(std::tanh(8.0) == doctest::Approx(0.99999977).epsilon(1e-8));

  auto g = grad_height(f, one, solve_height(f, one));
  CHECK(g.taps.w[0] == doctest::Approx(1.0));
}

TEST_CASE("two equal weights at -0.2 and +0.2 balance at zero") {
  ZMonoField f(4, 80.0, 3, 0.0);
  f.h[0] = -0.2;
  f.h[1] = 0.2;
  auto two = manual({{0, 0.5}, {1, 0.5}});
  auto r = solve_height(f, two);
  CHECK(std::abs(r.z) < 1e-12);
  auto g = grad_height(f, two, r);
  CHECK(g.taps.w[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(g.taps.w[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("clamped plateaus") {
  ZMonoField high(8, 80.0, 3, 2.0);  // every curve still negative at z = 1
  auto r = solve_height(high, neighbor_weights(high, 0.1, 0.2));
  CHECK(r.clamped);
  CHECK(r.z == 1.0);
  auto g = grad_height(high, 0.1, 0.2);
  CHECK(g.clamped);
  for (int t = 0; t < g.taps.count; ++t) CHECK(g.taps.w[t] == 0.0);

  ZMonoField low(8, 80.0, 3, -2.0);
  CHECK(height_of(low, 0.3, -0.4) == -1.0);
  CHECK(ref::height_of(low, 0.3, -0.4) == -1.0);
  CHECK(ref::height_of(high, 0.3, -0.4) == 1.0);
}

TEST_CASE("eval is bounded and monotone in z") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int bad = 0;
  ZMonoField f;
  for (int s = 0; s < 10000; ++s) {
    if (s % 500 == 0) f = random_field(12, 1000 + s, 0.9);
    const double x = u(rng), y = u(rng);
    double z1 = u(rng), z2 = u(rng);
    if (z1 > z2) std::swap(z1, z2);
    const double a = eval_sdf(f, {x, y, z1}), b = eval_sdf(f, {x, y, z2});
    if (!(b >= a) || std::abs(a) > 1.0 || std::abs(b) > 1.0) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("roots agree with a dense scan and have tiny residuals") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 100000;
  const double step = 2.0 / (n - 1);
  for (int c = 0; c < 20; ++c) {
    ZMonoField f = random_field(10, 40 + c, c % 2 ? 0.7 : 0.05);
    const double x = u(rng), y = u(rng);
    auto nw = neighbor_weights(f, x, y);
    double best = 0.0, best_abs = 1e300;
    for (int i = 0; i < n; ++i) {
      const double z = -1.0 + i * step;
      const double a = std::abs(eval_curve(f, nw, z).f);
      if (a < best_abs) best_abs = a, best = z;
    }
    auto r = solve_height(f, nw);
    REQUIRE_FALSE(r.clamped);
    CHECK(std::abs(r.z - best) < 2 * step);
    CHECK(std::abs(eval_sdf(f, {x, y, r.z})) < 1e-9);
    CHECK(std::abs(ref::height_of(f, x, y) - r.z) < 1e-9);
  }
}

TEST_CASE("warm start does not change the root") {
  ZMonoField f = random_field(10, 77, 0.5);
  auto nw = neighbor_weights(f, 0.13, -0.61);
  const double z = solve_height(f, nw).z;
  for (double g : {-1.0, -0.3, 0.0, 0.9, 1.0}) CHECK(std::abs(solve_height(f, nw, g).z - z) < 1e-11);
}

TEST_CASE("height gradients match central differences") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  int checked = 0;
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    ZMonoField f = random_field(8, 300 + c, c % 3 == 0 ? 0.6 : 0.04, c % 4 == 0 ? 5 : 3);
    const double x = u(rng), y = u(rng);
    auto g = grad_height(f, x, y);
    if (g.clamped) continue;
    double sum = 0.0;
    for (int t = 0; t < g.taps.count; ++t) {
      const double gt = g.taps.w[t];
      CHECK(gt >= 0.0);
      sum += gt;
      const double h0 = f.h[g.taps.cells[t]];
      const double d = 1e-5;
      f.h[g.taps.cells[t]] = h0 + d;
      const double zp = height_of(f, x, y);
      f.h[g.taps.cells[t]] = h0 - d;
      const double zm = height_of(f, x, y);
      f.h[g.taps.cells[t]] = h0;
      const double fd = (zp - zm) / (2 * d);
      if (std::abs(gt) > 1e-3) {
        worst = std::max(worst, std::abs(fd - gt) / std::abs(gt));
      } else {
        CHECK(std::abs(fd - gt) < 1e-6);
      }
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    ++checked;
  }
  CHECK(checked >= 90);
  CHECK(worst < 1e-3);
}

TEST_CASE("height grid") {
  SUBCASE("constant field") {
    ZMonoField f(16, 80.0, 3, 0.37);
    for (const HeightMap& hm : {height_grid(f, 40), ref::height_grid(f, 40)}) {
      CHECK(hm.valid_count() == 1600);
      for (double v : hm.heights) CHECK(std::abs(v - 0.37) < 1e-9);
    }
  }
  SUBCASE("single raised cell") {
    ZMonoField f(16, 80.0, 3, -0.5);
    f.at(5, 9) = 0.5;
    HeightMap hm = height_grid(f, 64);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < hm.heights.size(); ++i)
      if (hm.heights[i] > hm.heights[arg]) arg = i;
    const double x = hm.cell_center(static_cast<int>(arg % 64)), y = hm.cell_center(static_cast<int>(arg / 64));
    const double r = std::hypot(x - f.cell_center(5), y - f.cell_center(9));
    CHECK(r <= std::sqrt(2.0) / 16.0);
  }
  SUBCASE("parallel matches the serial bisection") {
    ZMonoField f = random_field(24, 99, 0.6);
    HeightMap a = height_grid(f, 96), b = ref::height_grid(f, 96);
    for (std::size_t i = 0; i < a.heights.size(); ++i) CHECK(std::abs(a.heights[i] - b.heights[i]) < 1e-9);
  }
  CHECK_THROWS(height_grid(ZMonoField(4), 1));
}

TEST_CASE("sech2 is stable") {
  CHECK(sech2(0.0) == 1.0);
  CHECK(sech2(1000.0) == 0.0);
  CHECK(sech2(-1000.0) == 0.0);
  CHECK(sech2(0.7) == doctest::Approx(1.0 / std::pow(std::cosh(0.7), 2)).epsilon(1e-14));
}

TEST_CASE("checkpoint round trip") {
  zt::TempDir dir("field");
  ZMonoField f = random_field(20, 4, 0.8, 5);
  f.sharpness = 63.5;
  write_field(f, dir / "f.zmf");
  ZMonoField r = read_field(dir / "f.zmf");
  CHECK(r.grid_res == 20);
  CHECK(r.window == 5);
  CHECK(r.sharpness == 63.5);
  REQUIRE(r.h.size() == f.h.size());
  CHECK(std::memcmp(r.h.data(), f.h.data(), f.h.size() * sizeof(double)) == 0);

  std::ofstream(dir / "bad.zmf") << "not a checkpoint";
  CHECK_THROWS(read_field(dir / "bad.zmf"));
}

TEST_CASE("field validation") {
  ZMonoField f(8);
  CHECK_NOTHROW(f.validate());
  f.window = 4;
  CHECK_THROWS(f.validate());
  f.window = 9;
  CHECK_THROWS(f.validate());
  f.window = 3;
  f.sharpness = 0;
  CHECK_THROWS(f.validate());
}
