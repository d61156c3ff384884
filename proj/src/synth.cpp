#include "zmono/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "zmono/mesh.hpp"
#include "zmono/raster.hpp"

namespace zmono {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double a, double b) {
  return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

bool separated(const Box& a, const Box& b, double gap) {
  return a.x1 + gap <= b.x0 || b.x1 + gap <= a.x0 || a.y1 + gap <= b.y0 || b.y1 + gap <= a.y0;
}

const Color kPalette[] = {
    {0.80f, 0.32f, 0.28f}, {0.30f, 0.52f, 0.78f}, {0.86f, 0.74f, 0.36f}, {0.42f, 0.68f, 0.40f},
    {0.72f, 0.50f, 0.80f}, {0.88f, 0.58f, 0.30f}, {0.55f, 0.78f, 0.80f}, {0.66f, 0.62f, 0.58f},
};

}  // namespace

BoxCity gen_city(const CityParams& p, std::uint64_t seed) {
  if (p.count < 0) throw std::invalid_argument("box count must be >= 0");
  if (!(p.gap > 0.0)) throw std::invalid_argument("box gap must be > 0");
  if (!(p.min_size > 0.0 && p.max_size >= p.min_size)) throw std::invalid_argument("bad footprint size range");
  if (!(p.min_height > 0.0 && p.max_height >= p.min_height)) throw std::invalid_argument("bad height range");
  if (!(p.bounds.x1 > p.bounds.x0 && p.bounds.y1 > p.bounds.y0)) throw std::invalid_argument("empty scene bounds");
  BoxCity city;
  city.ground = p.ground;
  city.bounds = p.bounds;
  city.seed = seed;
  std::mt19937_64 rng(splitmix(seed));
  int attempts = 0;
  while (static_cast<int>(city.boxes.size()) < p.count) {
    if (++attempts > p.max_attempts) {
      throw std::runtime_error("could only place " + std::to_string(city.boxes.size()) + " of " +
                               std::to_string(p.count) + " boxes");
    }
    Box b;
    const double w = uniform(rng, p.min_size, p.max_size), d = uniform(rng, p.min_size, p.max_size);
    const double lx = p.bounds.x0 + p.gap, hx = p.bounds.x1 - p.gap - w;
    const double ly = p.bounds.y0 + p.gap, hy = p.bounds.y1 - p.gap - d;
    const double h = uniform(rng, p.min_height, p.max_height);
    const auto pick = rng();
    if (hx < lx || hy < ly) continue;
    b.x0 = uniform(rng, lx, hx);
    b.y0 = uniform(rng, ly, hy);
    b.x1 = b.x0 + w;
    b.y1 = b.y0 + d;
    b.roof = p.ground + h;
    b.color = kPalette[pick % std::size(kPalette)];
    b.checker = (pick >> 8) & 1;
    if (std::all_of(city.boxes.begin(), city.boxes.end(), [&](const Box& o) { return separated(b, o, p.gap); })) {
      city.boxes.push_back(b);
    }
  }
  return city;
}

double gt_height(const BoxCity& city, double x, double y) {
  double z = city.ground;
  for (const auto& b : city.boxes) {
    if (x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1) z = std::max(z, b.roof);
  }
  return z;
}

TriMesh gt_mesh(const BoxCity& city) {
  LatticeSurface s;
  s.xs = {city.bounds.x0, city.bounds.x1};
  s.ys = {city.bounds.y0, city.bounds.y1};
  for (const auto& b : city.boxes) {
    s.xs.insert(s.xs.end(), {b.x0, b.x1});
    s.ys.insert(s.ys.end(), {b.y0, b.y1});
  }
  for (auto* v : {&s.xs, &s.ys}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  const std::size_t cx = s.xs.size() - 1, cy = s.ys.size() - 1;
  s.corner.resize(cx * cy);
  for (std::size_t j = 0; j < cy; ++j) {
    for (std::size_t i = 0; i < cx; ++i) {
      const double h = gt_height(city, 0.5 * (s.xs[i] + s.xs[i + 1]), 0.5 * (s.ys[j] + s.ys[j + 1]));
      s.corner[j * cx + i] = {h, h, h, h};
    }
  }
  s.z_bottom = city.ground - 0.02 * std::max(city.bounds.width(), city.bounds.height());
  return build_lattice_surface(std::move(s));
}

PointCloud sample_mvs(const BoxCity& city, const MvsSamplingProfile& prof, std::uint64_t seed) {
  if (prof.roof_density < 0 || prof.ground_density < 0 || prof.facade_density < 0 || prof.noise_sigma < 0 ||
      prof.dropout < 0 || prof.dropout > 1 || prof.outlier_fraction < 0) {
    throw std::invalid_argument("invalid sampling profile");
  }
  // Surfaces: 0 ground, then per box its roof and four facades.
  const int n_surf = 1 + 5 * static_cast<int>(city.boxes.size());
  std::vector<std::vector<Vec3>> parts(n_surf);
  double top = city.ground;
  for (const auto& b : city.boxes) top = std::max(top, b.roof);

#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < n_surf; ++s) {
    std::mt19937_64 rng(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(s) + 1)));
    std::normal_distribution<double> noise(0.0, prof.noise_sigma > 0 ? prof.noise_sigma : 1.0);
    auto& out = parts[s];
    auto emit = [&](Vec3 p) {
      if (prof.dropout > 0.0 && uniform(rng, 0.0, 1.0) < prof.dropout) return;
      if (prof.noise_sigma > 0.0) p.z += noise(rng);
      out.push_back(p);
    };
    auto poisson = [&](double mean) -> long {
      if (!(mean > 0.0)) return 0;
      return std::poisson_distribution<long>(mean)(rng);
    };
    if (s == 0) {
      double area = city.bounds.width() * city.bounds.height();
      for (const auto& b : city.boxes) area -= (b.x1 - b.x0) * (b.y1 - b.y0);
      const long n = poisson(prof.ground_density * area);
      for (long k = 0; k < n;) {
        const double x = uniform(rng, city.bounds.x0, city.bounds.x1), y = uniform(rng, city.bounds.y0, city.bounds.y1);
        if (gt_height(city, x, y) != city.ground) continue;
        emit({x, y, city.ground});
        ++k;
      }
      continue;
    }
    const Box& b = city.boxes[(s - 1) / 5];
    const int face = (s - 1) % 5;
    if (face == 0) {
      const long n = poisson(prof.roof_density * (b.x1 - b.x0) * (b.y1 - b.y0));
      for (long k = 0; k < n; ++k) emit({uniform(rng, b.x0, b.x1), uniform(rng, b.y0, b.y1), b.roof});
      continue;
    }
    const bool along_x = face <= 2;
    const double len = along_x ? b.x1 - b.x0 : b.y1 - b.y0;
    const long n = poisson(prof.facade_density * len * (b.roof - city.ground));
    for (long k = 0; k < n; ++k) {
      const double t = uniform(rng, 0.0, len), z = uniform(rng, city.ground, b.roof);
      if (face == 1) emit({b.x0 + t, b.y0, z});
      if (face == 2) emit({b.x0 + t, b.y1, z});
      if (face == 3) emit({b.x0, b.y0 + t, z});
      if (face == 4) emit({b.x1, b.y0 + t, z});
    }
  }

  PointCloud cloud;
  for (const auto& p : parts) cloud.points.insert(cloud.points.end(), p.begin(), p.end());
  if (prof.outlier_fraction > 0.0) {
    // Spurious matches floating above the surface, up to 10% over the
    // tallest roof.
    std::mt19937_64 rng(splitmix(seed ^ 0x6F75746C69657273ull));
    const auto n = static_cast<std::size_t>(std::llround(prof.outlier_fraction * cloud.points.size()));
    const double ceiling = top + 0.1 * (top - city.ground);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = uniform(rng, city.bounds.x0, city.bounds.x1), y = uniform(rng, city.bounds.y0, city.bounds.y1);
      cloud.points.push_back({x, y, uniform(rng, gt_height(city, x, y), ceiling)});
    }
  }
  return cloud;
}

Color gt_color(const BoxCity& city, const Vec3& p, const Vec3& n) {
  const Vec3 u = normalized(n);
  if (u.z > 0.5) {
    for (const auto& b : city.boxes) {
      if (p.x >= b.x0 && p.x <= b.x1 && p.y >= b.y0 && p.y <= b.y1 && std::abs(p.z - b.roof) < 1e-6 * (1.0 + std::abs(b.roof))) {
        if (!b.checker) return b.color;
        const long cx = static_cast<long>(std::floor((p.x - b.x0) / 10.0)), cy = static_cast<long>(std::floor((p.y - b.y0) / 10.0));
        const float f = ((cx + cy) & 1) ? 0.65f : 1.0f;
        return {b.color[0] * f, b.color[1] * f, b.color[2] * f};
      }
    }
    const long cx = static_cast<long>(std::floor(p.x / 25.0)), cy = static_cast<long>(std::floor(p.y / 25.0));
    return ((cx + cy) & 1) ? Color{0.36f, 0.36f, 0.34f} : Color{0.46f, 0.44f, 0.40f};
  }
  if (u.z < -0.5) return {0.1f, 0.1f, 0.1f};
  // Facades: the owning box color, darkened, with floor bands every 4 m.
  Color base{0.5f, 0.5f, 0.5f};
  double best = 1e300;
  for (const auto& b : city.boxes) {
    const double dx = std::max({b.x0 - p.x, 0.0, p.x - b.x1}), dy = std::max({b.y0 - p.y, 0.0, p.y - b.y1});
    const double d = dx * dx + dy * dy;
    if (d < best) {
      best = d;
      base = b.color;
    }
  }
  const float band = std::fmod(std::abs(p.z - city.ground), 4.0) < 1.2 ? 0.45f : 0.7f;
  return {base[0] * band, base[1] * band, base[2] * band};
}

std::vector<RgbImage> render_gt_views(const BoxCity& city, const std::vector<PinholeCamera>& cameras, Color background) {
  const TriMesh mesh = gt_mesh(city);
  std::vector<RgbImage> out;
  out.reserve(cameras.size());
  for (const auto& cam : cameras) {
    out.push_back(render_colors(
        mesh, cam, [&](std::int32_t t, const Vec3& p) { return gt_color(city, p, mesh.normal(t)); }, background));
  }
  return out;
}

void write_scene(const BoxCity& city, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[512];
  out << "zmono-scene 1\n";
  out << "seed " << city.seed << "\n";
  std::snprintf(buf, sizeof buf, "ground %.17g\nbounds %.17g %.17g %.17g %.17g\n", city.ground, city.bounds.x0,
                city.bounds.y0, city.bounds.x1, city.bounds.y1);
  out << buf;
  for (const auto& b : city.boxes) {
    std::snprintf(buf, sizeof buf, "box %.17g %.17g %.17g %.17g %.17g %.9g %.9g %.9g %d\n", b.x0, b.y0, b.x1, b.y1,
                  b.roof, b.color[0], b.color[1], b.color[2], b.checker ? 1 : 0);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

BoxCity read_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line, key;
  std::getline(in, line);
  if (line != "zmono-scene 1") throw std::runtime_error(path + ": not a version 1 scene file");
  BoxCity city;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    if (!(ls >> key) || key[0] == '#') continue;
    bool ok = true;
    if (key == "seed") {
      ok = static_cast<bool>(ls >> city.seed);
    } else if (key == "ground") {
      ok = static_cast<bool>(ls >> city.ground);
    } else if (key == "bounds") {
      ok = static_cast<bool>(ls >> city.bounds.x0 >> city.bounds.y0 >> city.bounds.x1 >> city.bounds.y1);
    } else if (key == "box") {
      Box b;
      int checker = 0;
      ok = static_cast<bool>(ls >> b.x0 >> b.y0 >> b.x1 >> b.y1 >> b.roof >> b.color[0] >> b.color[1] >> b.color[2] >> checker);
      b.checker = checker != 0;
      city.boxes.push_back(b);
    } else {
      ok = false;
    }
    if (!ok) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": cannot parse '" + line + "'");
  }
  return city;
}

}  // namespace zmono
