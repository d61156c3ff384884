#include "zmono/texture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zmono/raster.hpp"

namespace zmono {

TextureAtlas::TextureAtlas(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) throw std::invalid_argument("atlas size must be positive");
  rgb.resize(texel_count() * 3);
  for (std::size_t t = 0; t < texel_count(); ++t) std::copy(kSentinel.begin(), kSentinel.end(), rgb.begin() + 3 * t);
  coverage.assign(texel_count(), 0.0f);
}

TextureAtlas TextureAtlas::from_image(const RgbImage& img) {
  TextureAtlas a(img.width, img.height);
  a.rgb = img.data;
  return a;
}

RgbImage TextureAtlas::image() const {
  RgbImage img;
  img.width = width;
  img.height = height;
  img.data = rgb;
  return img;
}

// ---------------------------------------------------------------------------
// UV charts

TriMesh assign_uvs(const TriMesh& mesh, const UvOptions& opt) {
  mesh.validate();
  if (opt.width < 8 || opt.height < 8 || opt.gutter < 1) throw std::invalid_argument("bad atlas layout options");
  const int W = opt.width, H = opt.height, g = opt.gutter;
  const std::size_t nt = mesh.triangles.size();

  enum Kind : std::uint8_t { Top, Steep, Down };
  std::vector<Kind> kind(nt);
  Bounds3 top_box;
  for (std::size_t t = 0; t < nt; ++t) {
    const double a = norm(mesh.normal(t));
    const double nz = a > 0.0 ? mesh.normal(t).z / a : 0.0;
    kind[t] = nz >= 0.5 ? Top : (nz <= -0.5 || a == 0.0 ? Down : Steep);
    if (kind[t] == Top) {
      for (auto v : mesh.triangles[t]) top_box.extend(mesh.vertices[v]);
    }
  }

  // Texels per meter, shared by every chart.
  double s = 1.0;
  if (!top_box.empty()) {
    const Vec3 e = top_box.extent();
    const double sx = e.x > 0 ? (W - 2.0 * g) / e.x : 1e300, sy = e.y > 0 ? (H / 2.0 - 2.0 * g) / e.y : 1e300;
    s = std::min(sx, sy);
    if (s == 1e300) s = 1.0;
  } else {
    Bounds3 b = bounds_of(mesh.vertices);
    const double ext = std::max({b.extent().x, b.extent().y, b.extent().z, 1e-12});
    s = (W - 2.0 * g) / ext;
  }

  TriMesh out;
  out.triangles.resize(nt);
  std::vector<std::int64_t> top_copy(mesh.vertices.size(), -1);
  auto add = [&](const Vec3& p, double tu, double tv) {
    out.vertices.push_back(p);
    out.uvs.push_back({tu / W, tv / H});
    return static_cast<std::uint32_t>(out.vertices.size() - 1);
  };

  // Steep charts in metres; the shelf packer scales them by the density.
  struct Chart {
    std::size_t tri;
    std::array<Vec2, 3> q;  // bbox min at the origin
    Vec2 size;
  };
  std::vector<Chart> charts;
  for (std::size_t t = 0; t < nt; ++t) {
    if (kind[t] != Steep) continue;
    const auto& tri = mesh.triangles[t];
    const Vec3 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const Vec3 e1 = normalized(p1 - p0), e2 = cross(normalized(mesh.normal(t)), e1);
    std::array<Vec2, 3> q{Vec2{0, 0}, Vec2{norm(p1 - p0), 0}, Vec2{dot(p2 - p0, e1), dot(p2 - p0, e2)}};
    const double mx = std::min({q[0].x, q[1].x, q[2].x}), my = std::min({q[0].y, q[1].y, q[2].y});
    Vec2 size{0, 0};
    for (auto& p : q) {
      p.x -= mx;
      p.y -= my;
      size.x = std::max(size.x, p.x);
      size.y = std::max(size.y, p.y);
    }
    charts.push_back({t, q, size});
  }
  std::stable_sort(charts.begin(), charts.end(), [](const Chart& a, const Chart& b) { return a.size.y > b.size.y; });

  auto texels = [](double m, double d) { return std::max(1, static_cast<int>(std::ceil(m * d))); };
  // Shelf origin of every chart at density d, or empty when they overflow.
  auto pack = [&](double d) {
    std::vector<std::array<int, 2>> at;
    at.reserve(charts.size());
    int cx = 0, cy = H / 2, shelf = 0;
    for (const auto& c : charts) {
      const int bw = texels(c.size.x, d) + 2 * g, bh = texels(c.size.y, d) + 2 * g;
      if (bw > W) return std::vector<std::array<int, 2>>{};
      if (cx + bw > W) {
        cy += shelf;
        cx = 0;
        shelf = 0;
      }
      if (cy + bh > H) return std::vector<std::array<int, 2>>{};
      at.push_back({cx, cy});
      cx += bw;
      shelf = std::max(shelf, bh);
    }
    return at;
  };

  // Walls shrink the shared density until they fit; the top chart follows.
  std::vector<std::array<int, 2>> placed = pack(s);
  if (placed.size() != charts.size()) {
    double lo = 0.0, hi = s;
    if (pack(lo).size() != charts.size()) {
      throw std::runtime_error("atlas overflow: " + std::to_string(charts.size()) +
                               " steep charts do not fit the lower half of a " + std::to_string(W) + "x" +
                               std::to_string(H) + " atlas; use a larger atlas");
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (pack(mid).size() == charts.size() ? lo : hi) = mid;
    }
    s = lo;
    placed = pack(s);
  }

  for (std::size_t t = 0; t < nt; ++t) {
    if (kind[t] != Top) continue;
    for (int c = 0; c < 3; ++c) {
      const auto v = mesh.triangles[t][c];
      if (top_copy[v] < 0) {
        const Vec3& p = mesh.vertices[v];
        top_copy[v] = add(p, g + (p.x - top_box.min.x) * s, g + (top_box.max.y - p.y) * s);
      }
      out.triangles[t][c] = static_cast<std::uint32_t>(top_copy[v]);
    }
  }
  for (std::size_t i = 0; i < charts.size(); ++i) {
    const Chart& c = charts[i];
    for (int k = 0; k < 3; ++k) {
      out.triangles[c.tri][k] = add(mesh.vertices[mesh.triangles[c.tri][k]], placed[i][0] + g + c.q[k].x * s,
                                    placed[i][1] + g + c.q[k].y * s);
    }
  }

  for (std::size_t t = 0; t < nt; ++t) {
    if (kind[t] != Down) continue;
    for (int k = 0; k < 3; ++k) out.triangles[t][k] = add(mesh.vertices[mesh.triangles[t][k]], 0.5, 0.5);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Baking

namespace {

// Off-diagonal neighbours stored once, at the lower texel index.
constexpr int kDx[4] = {1, 0, 1, -1};
constexpr int kDy[4] = {0, 1, 1, 1};

struct NormalSystem {
  int W, H;
  std::vector<double> diag, off, b;  // off: 4 per texel, b: 3 per texel
  double c = 0.0;
  double samples = 0.0;  // pixel-channel count

  NormalSystem(int w, int h)
      : W(w), H(h), diag(static_cast<std::size_t>(w) * h), off(4 * diag.size()), b(3 * diag.size()) {}

  void add_pair(std::size_t i, std::size_t j, double w) {
    if (i == j) {
      diag[i] += w;
      return;
    }
    if (j < i) std::swap(i, j);
    const int dx = static_cast<int>(j % W) - static_cast<int>(i % W), dy = static_cast<int>(j / W - i / W);
    for (int s = 0; s < 4; ++s) {
      if (dx == kDx[s] && dy == kDy[s]) {
        off[4 * i + s] += w;
        return;
      }
    }
    throw std::logic_error("bilinear taps not adjacent");
  }

  void add_view(const TriMesh& mesh, const RgbImage& image, const PinholeCamera& cam, bool interior_only) {
    if (image.width != cam.width || image.height != cam.height) {
      throw std::invalid_argument("view image size differs from its camera");
    }
    const FrameBuffer fb = rasterize(mesh, cam);
    for (int y = 0; y < fb.height; ++y) {
      for (int x = 0; x < fb.width; ++x) {
        const std::size_t i = fb.index(x, y);
        if (!fb.covered(i)) continue;
        if (interior_only) {
          if (x == 0 || y == 0 || x == fb.width - 1 || y == fb.height - 1) continue;
          if (!fb.covered(i - 1) || !fb.covered(i + 1) || !fb.covered(i - fb.width) || !fb.covered(i + fb.width)) continue;
        }
        const auto& t = mesh.triangles[fb.tri[i]];
        const auto& w = fb.bary[i];
        const double u = w[0] * mesh.uvs[t[0]].x + w[1] * mesh.uvs[t[1]].x + w[2] * mesh.uvs[t[2]].x;
        const double v = w[0] * mesh.uvs[t[0]].y + w[1] * mesh.uvs[t[1]].y + w[2] * mesh.uvs[t[2]].y;
        // Same taps as sample_bilinear.
        const double fx = std::clamp(u * W - 0.5, 0.0, W - 1.0), fy = std::clamp(v * H - 0.5, 0.0, H - 1.0);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
        const double ax = fx - x0, ay = fy - y0;
        std::array<std::size_t, 4> k{static_cast<std::size_t>(y0) * W + x0, static_cast<std::size_t>(y0) * W + x1,
                                     static_cast<std::size_t>(y1) * W + x0, static_cast<std::size_t>(y1) * W + x1};
        std::array<double, 4> wt{(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
        const float* px = image.at(x, y);
        for (int a = 0; a < 4; ++a) {
          if (wt[a] == 0.0) continue;
          for (int ch = 0; ch < 3; ++ch) b[3 * k[a] + ch] += wt[a] * px[ch];
          add_pair(k[a], k[a], wt[a] * wt[a]);
          for (int bb = a + 1; bb < 4; ++bb) {
            if (wt[bb] != 0.0) add_pair(k[a], k[bb], wt[a] * wt[bb]);
          }
        }
        for (int ch = 0; ch < 3; ++ch) c += static_cast<double>(px[ch]) * px[ch];
        samples += 3.0;
      }
    }
  }

  double row_sum(std::size_t k) const {
    const int x = static_cast<int>(k % W), y = static_cast<int>(k / W);
    double s = diag[k];
    for (int q = 0; q < 4; ++q) {
      s += off[4 * k + q];
      const int px = x - kDx[q], py = y - kDy[q];
      if (px >= 0 && px < W && py >= 0) s += off[4 * (static_cast<std::size_t>(py) * W + px) + q];
    }
    return s;
  }

  // (M T) for all channels of texel k.
  std::array<double, 3> apply(const std::vector<double>& T, std::size_t k) const {
    const int x = static_cast<int>(k % W), y = static_cast<int>(k / W);
    std::array<double, 3> r{};
    for (int ch = 0; ch < 3; ++ch) r[ch] = diag[k] * T[3 * k + ch];
    for (int q = 0; q < 4; ++q) {
      const int nx = x + kDx[q], ny = y + kDy[q];
      if (nx >= 0 && nx < W && ny < H) {
        const double m = off[4 * k + q];
        const std::size_t n = static_cast<std::size_t>(ny) * W + nx;
        if (m != 0.0) {
          for (int ch = 0; ch < 3; ++ch) r[ch] += m * T[3 * n + ch];
        }
      }
      const int px = x - kDx[q], py = y - kDy[q];
      if (px >= 0 && px < W && py >= 0) {
        const std::size_t n = static_cast<std::size_t>(py) * W + px;
        const double m = off[4 * n + q];
        if (m != 0.0) {
          for (int ch = 0; ch < 3; ++ch) r[ch] += m * T[3 * n + ch];
        }
      }
    }
    return r;
  }
};

// Mean squared error of the current texels against all accumulated pixels.
double system_loss(const NormalSystem& S, const std::vector<double>& T, const std::vector<std::uint8_t>& active) {
  std::vector<double> rows(S.H, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < S.H; ++y) {
    double acc = 0.0;
    for (int x = 0; x < S.W; ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * S.W + x;
      if (!active[k]) continue;
      const auto mt = S.apply(T, k);
      for (int ch = 0; ch < 3; ++ch) acc += T[3 * k + ch] * mt[ch] - 2.0 * S.b[3 * k + ch] * T[3 * k + ch];
    }
    rows[y] = acc;
  }
  double total = S.c;
  for (double r : rows) total += r;
  return std::max(0.0, total) / S.samples;
}

BakeResult descend(const NormalSystem& S, const TextureAtlas& start, int epochs, bool zero_start) {
  const std::size_t n = static_cast<std::size_t>(S.W) * S.H;
  if (S.samples == 0.0) throw std::runtime_error("no view covers any texel");
  std::vector<double> D(n);
  std::vector<std::uint8_t> active(n);
  for (std::size_t k = 0; k < n; ++k) {
    D[k] = S.row_sum(k);
    active[k] = D[k] > 0.0;
  }
  std::vector<double> T(start.rgb.begin(), start.rgb.end());
  if (zero_start) {
    for (std::size_t k = 0; k < n; ++k) {
      if (active[k]) T[3 * k] = T[3 * k + 1] = T[3 * k + 2] = 0.0;
    }
  }
  BakeResult res;
  res.loss.push_back(system_loss(S, T, active));
  std::vector<double> next = T;
  for (int e = 0; e < epochs; ++e) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < S.H; ++y) {
      for (int x = 0; x < S.W; ++x) {
        const std::size_t k = static_cast<std::size_t>(y) * S.W + x;
        if (!active[k]) continue;
        const auto mt = S.apply(T, k);
        for (int ch = 0; ch < 3; ++ch) {
          next[3 * k + ch] = std::clamp(T[3 * k + ch] - (mt[ch] - S.b[3 * k + ch]) / D[k], 0.0, 1.0);
        }
      }
    }
    T.swap(next);
    res.loss.push_back(system_loss(S, T, active));
  }
  res.atlas = start;
  for (std::size_t k = 0; k < n; ++k) {
    if (!active[k]) continue;
    for (int ch = 0; ch < 3; ++ch) res.atlas.rgb[3 * k + ch] = static_cast<float>(T[3 * k + ch]);
    res.atlas.coverage[k] += static_cast<float>(D[k]);
  }
  return res;
}

void check_mesh(const TriMesh& mesh) {
  mesh.validate();
  if (!mesh.has_uvs()) throw std::invalid_argument("baking needs mesh uvs");
}

}  // namespace

BakeResult bake_basic(const TriMesh& mesh, std::span<const View> views, int atlas_width, int atlas_height,
                      const BakeOptions& opt) {
  check_mesh(mesh);
  if (views.empty()) throw std::invalid_argument("bake needs at least one view");
  NormalSystem S(atlas_width, atlas_height);
  for (const auto& v : views) S.add_view(mesh, v.image, v.camera, opt.interior_only);
  return descend(S, TextureAtlas(atlas_width, atlas_height), opt.epochs, true);
}

BakeResult bake_from(const TriMesh& mesh, std::span<const View> views, const TextureAtlas& start,
                     const BakeOptions& opt) {
  check_mesh(mesh);
  if (views.empty()) throw std::invalid_argument("bake needs at least one view");
  NormalSystem S(start.width, start.height);
  for (const auto& v : views) S.add_view(mesh, v.image, v.camera, opt.interior_only);
  return descend(S, start, opt.epochs, false);
}

std::vector<PinholeCamera> novel_view_grid(const Bounds3& bbox, const NovelViewConfig& cfg) {
  if (bbox.empty()) throw std::invalid_argument("novel views need a nonempty bbox");
  if (!(cfg.stride > 0.0 && cfg.altitude > 0.0 && cfg.resolution > 0)) throw std::invalid_argument("bad novel view grid");
  const double ex = bbox.extent().x + 2.0 * cfg.margin, ey = bbox.extent().y + 2.0 * cfg.margin;
  const int nx = std::max(1, static_cast<int>(std::ceil(ex / cfg.stride - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(ey / cfg.stride - 1e-9)));
  const Vec3 c = bbox.center();
  std::vector<PinholeCamera> cams;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec3 site{c.x + (i - (nx - 1) / 2.0) * cfg.stride, c.y + (j - (ny - 1) / 2.0) * cfg.stride, bbox.min.z};
      for (double h : cfg.headings) {
        cams.push_back(aimed_camera(site, cfg.altitude, h, cfg.pitch_deg, cfg.resolution, cfg.resolution, cfg.fov_deg));
      }
    }
  }
  return cams;
}

void RefineConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("refine iterations must be >= 1");
  if (epochs < 1) throw std::invalid_argument("refine epochs must be >= 1");
}

RefineResult refine(const TriMesh& mesh, const TextureAtlas& basic, const EnhancerHook& hook, const RefineConfig& cfg) {
  cfg.validate();
  check_mesh(mesh);
  RefineResult r;
  r.atlas = basic;
  const auto cams = novel_view_grid(bounds_of(mesh.vertices), cfg.views);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, hook.max_parallel));
  for (int it = 0; it < cfg.iterations; ++it) {
    const RgbImage current = r.atlas.image();
    NormalSystem S(r.atlas.width, r.atlas.height);
    // Views stream through in batches so only `batch` renders are alive.
    for (std::size_t first = 0; first < cams.size(); first += batch) {
      const std::size_t last = std::min(cams.size(), first + batch);
      std::vector<RgbImage> low;
      for (std::size_t v = first; v < last; ++v) low.push_back(render_with_atlas(mesh, current, cams[v]));
      std::vector<RgbImage> targets;
      try {
        targets = hook.apply(low);
      } catch (const HookError& e) {
        const int view = static_cast<int>(first) + std::max(e.view, 0);
        r.failure = HookError(view, "iteration " + std::to_string(it) + ", view " + std::to_string(view) + ": " + e.what());
        return r;
      }
      for (std::size_t v = first; v < last; ++v) S.add_view(mesh, targets[v - first], cams[v], true);
    }
    if (S.samples == 0.0) throw std::runtime_error("no novel view sees the mesh");
    auto b = descend(S, r.atlas, cfg.epochs, false);
    r.atlas = std::move(b.atlas);
    r.loss.push_back(std::move(b.loss));
    ++r.completed_iterations;
  }
  return r;
}

}  // namespace zmono
