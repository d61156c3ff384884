#include "zmono/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zmono {

FrameBuffer::FrameBuffer(int w, int h)
    : width(w),
      height(h),
      depth(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity()),
      tri(static_cast<std::size_t>(w) * h, -1),
      bary(static_cast<std::size_t>(w) * h, {0.f, 0.f, 0.f}) {}

std::size_t FrameBuffer::covered_count() const {
  return static_cast<std::size_t>(std::count_if(tri.begin(), tri.end(), [](std::int32_t t) { return t >= 0; }));
}

namespace {

constexpr int kBand = 16;

// A screen-space triangle after near-plane clipping. `src` holds, per
// vertex, barycentrics with respect to the original mesh triangle.
struct Setup {
  std::int32_t tri = -1;
  std::array<double, 3> sx{}, sy{}, inv_z{};
  std::array<std::array<double, 3>, 3> src{};
  double area = 0.0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

struct ClipVert {
  Vec3 c;  // camera space
  std::array<double, 3> src;
};

void setup_triangle(const TriMesh& mesh, const PinholeCamera& cam, std::int32_t t, const RasterOptions& opt,
                    std::array<Setup, 2>& out) {
  out[0].tri = out[1].tri = -1;
  const auto& idx = mesh.triangles[t];
  if (opt.cull_backfaces && dot(mesh.normal(t), cam.position - mesh.vertices[idx[0]]) <= 0.0) return;
  std::array<ClipVert, 3> in;
  for (int k = 0; k < 3; ++k) {
    const Vec3 d = mesh.vertices[idx[k]] - cam.position;
    in[k].c = {dot(d, cam.right()), dot(d, cam.down()), dot(d, cam.forward())};
    in[k].src = {k == 0 ? 1.0 : 0.0, k == 1 ? 1.0 : 0.0, k == 2 ? 1.0 : 0.0};
  }
  // Clip against z = near (Sutherland-Hodgman, one plane).
  std::array<ClipVert, 4> poly;
  int n = 0;
  for (int k = 0; k < 3; ++k) {
    const ClipVert& a = in[k];
    const ClipVert& b = in[(k + 1) % 3];
    const bool ain = a.c.z > kNearPlane, bin = b.c.z > kNearPlane;
    if (ain) poly[n++] = a;
    if (ain != bin) {
      const double s = (kNearPlane - a.c.z) / (b.c.z - a.c.z);
      ClipVert m;
      m.c = a.c + (b.c - a.c) * s;
      m.c.z = kNearPlane;
      for (int q = 0; q < 3; ++q) m.src[q] = a.src[q] + (b.src[q] - a.src[q]) * s;
      if (n < 4) poly[n++] = m;
    }
  }
  if (n < 3) return;
  const double f = cam.focal();
  for (int s = 0; s + 2 < n && s < 2; ++s) {
    const std::array<int, 3> vi{0, s + 1, s + 2};
    Setup& st = out[s];
    for (int k = 0; k < 3; ++k) {
      const ClipVert& v = poly[vi[k]];
      st.sx[k] = f * v.c.x / v.c.z + cam.cx;
      st.sy[k] = f * v.c.y / v.c.z + cam.cy;
      st.inv_z[k] = 1.0 / v.c.z;
      st.src[k] = v.src;
    }
    st.area = (st.sx[1] - st.sx[0]) * (st.sy[2] - st.sy[0]) - (st.sx[2] - st.sx[0]) * (st.sy[1] - st.sy[0]);
    if (st.area == 0.0 || !std::isfinite(st.area)) continue;
    const double lx = std::min({st.sx[0], st.sx[1], st.sx[2]}), hx = std::max({st.sx[0], st.sx[1], st.sx[2]});
    const double ly = std::min({st.sy[0], st.sy[1], st.sy[2]}), hy = std::max({st.sy[0], st.sy[1], st.sy[2]});
    st.x0 = static_cast<int>(std::max(0.0, std::ceil(lx - 0.5)));
    st.x1 = static_cast<int>(std::min<double>(cam.width - 1, std::floor(hx - 0.5)));
    st.y0 = static_cast<int>(std::max(0.0, std::ceil(ly - 0.5)));
    st.y1 = static_cast<int>(std::min<double>(cam.height - 1, std::floor(hy - 0.5)));
    if (st.x0 > st.x1 || st.y0 > st.y1) continue;
    st.tri = t;
  }
}

void shade_pixel(const Setup& st, int x, int y, FrameBuffer& fb) {
  const double px = x + 0.5, py = y + 0.5;
  auto edge = [&](int a, int b) {
    return (st.sx[b] - st.sx[a]) * (py - st.sy[a]) - (st.sy[b] - st.sy[a]) * (px - st.sx[a]);
  };
  const double b0 = edge(1, 2) / st.area, b1 = edge(2, 0) / st.area, b2 = edge(0, 1) / st.area;
  if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) return;
  const double iz = b0 * st.inv_z[0] + b1 * st.inv_z[1] + b2 * st.inv_z[2];
  if (!(iz > 0.0)) return;
  const double depth = 1.0 / iz;
  if (depth < kNearPlane || depth > kFarPlane) return;
  const std::size_t i = fb.index(x, y);
  if (depth > fb.depth[i] || (depth == fb.depth[i] && st.tri >= fb.tri[i] && fb.tri[i] >= 0)) return;
  const std::array<double, 3> w{b0 * st.inv_z[0] * depth, b1 * st.inv_z[1] * depth, b2 * st.inv_z[2] * depth};
  std::array<float, 3> bc;
  for (int q = 0; q < 3; ++q) bc[q] = static_cast<float>(w[0] * st.src[0][q] + w[1] * st.src[1][q] + w[2] * st.src[2][q]);
  fb.depth[i] = depth;
  fb.tri[i] = st.tri;
  fb.bary[i] = bc;
}

}  // namespace

FrameBuffer rasterize(const TriMesh& mesh, const PinholeCamera& cam, const RasterOptions& opt) {
  cam.validate();
  mesh.validate();
  FrameBuffer fb(cam.width, cam.height);
  const auto T = static_cast<std::int32_t>(mesh.triangles.size());
  std::vector<std::array<Setup, 2>> setups(T);
#pragma omp parallel for schedule(static)
  for (std::int32_t t = 0; t < T; ++t) setup_triangle(mesh, cam, t, opt, setups[t]);

  // Bin sub-triangles into horizontal bands; each band is owned by one
  // thread, and the (depth, id) minimum makes the order irrelevant.
  const int bands = (cam.height + kBand - 1) / kBand;
  std::vector<std::vector<const Setup*>> bins(bands);
  for (const auto& pair : setups) {
    for (const Setup& st : pair) {
      if (st.tri < 0) continue;
      for (int b = st.y0 / kBand; b <= st.y1 / kBand; ++b) bins[b].push_back(&st);
    }
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < bands; ++b) {
    const int ylo = b * kBand, yhi = std::min(cam.height - 1, ylo + kBand - 1);
    for (const Setup* st : bins[b]) {
      for (int y = std::max(ylo, st->y0); y <= std::min(yhi, st->y1); ++y) {
        for (int x = st->x0; x <= st->x1; ++x) shade_pixel(*st, x, y, fb);
      }
    }
  }
  return fb;
}

Vec3 surface_point(const FrameBuffer& fb, const TriMesh& mesh, std::size_t i) {
  const auto& t = mesh.triangles[fb.tri[i]];
  const auto& b = fb.bary[i];
  return mesh.vertices[t[0]] * b[0] + mesh.vertices[t[1]] * b[1] + mesh.vertices[t[2]] * b[2];
}

GrayImage height_channel(const FrameBuffer& fb, const TriMesh& mesh, float background) {
  GrayImage img(fb.width, fb.height, background);
  for (std::size_t i = 0; i < fb.tri.size(); ++i) {
    if (fb.covered(i)) img.data[i] = static_cast<float>(surface_point(fb, mesh, i).z);
  }
  return img;
}

RgbImage normal_channel(const FrameBuffer& fb, const TriMesh& mesh) {
  RgbImage img(fb.width, fb.height);
  for (std::size_t i = 0; i < fb.tri.size(); ++i) {
    if (!fb.covered(i)) continue;
    const Vec3 n = normalized(mesh.normal(fb.tri[i]));
    float* p = img.data.data() + 3 * i;
    p[0] = static_cast<float>(0.5 * (n.x + 1.0));
    p[1] = static_cast<float>(0.5 * (n.y + 1.0));
    p[2] = static_cast<float>(0.5 * (n.z + 1.0));
  }
  return img;
}

RgbImage uv_channel(const FrameBuffer& fb, const TriMesh& mesh) {
  if (!mesh.has_uvs()) throw std::invalid_argument("mesh has no uvs");
  RgbImage img(fb.width, fb.height);
  for (std::size_t i = 0; i < fb.tri.size(); ++i) {
    if (!fb.covered(i)) continue;
    const auto& t = mesh.triangles[fb.tri[i]];
    const auto& b = fb.bary[i];
    float* p = img.data.data() + 3 * i;
    p[0] = static_cast<float>(b[0] * mesh.uvs[t[0]].x + b[1] * mesh.uvs[t[1]].x + b[2] * mesh.uvs[t[2]].x);
    p[1] = static_cast<float>(b[0] * mesh.uvs[t[0]].y + b[1] * mesh.uvs[t[1]].y + b[2] * mesh.uvs[t[2]].y);
  }
  return img;
}

std::array<float, 3> sample_bilinear(const RgbImage& img, double u, double v) {
  const double fx = std::clamp(u * img.width - 0.5, 0.0, img.width - 1.0);
  const double fy = std::clamp(v * img.height - 0.5, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double ax = fx - x0, ay = fy - y0;
  std::array<float, 3> out;
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - ax) * img.at(x0, y0)[c] + ax * img.at(x1, y0)[c];
    const double bot = (1 - ax) * img.at(x0, y1)[c] + ax * img.at(x1, y1)[c];
    out[c] = static_cast<float>((1 - ay) * top + ay * bot);
  }
  return out;
}

RgbImage render_with_atlas(const TriMesh& mesh, const RgbImage& atlas, const PinholeCamera& cam,
                           std::array<float, 3> background, const RasterOptions& opt) {
  if (!mesh.has_uvs()) throw std::invalid_argument("render_with_atlas needs mesh uvs");
  const FrameBuffer fb = rasterize(mesh, cam, opt);
  RgbImage img(fb.width, fb.height, background);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < fb.height; ++y) {
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = fb.index(x, y);
      if (!fb.covered(i)) continue;
      const auto& t = mesh.triangles[fb.tri[i]];
      const auto& b = fb.bary[i];
      const double u = b[0] * mesh.uvs[t[0]].x + b[1] * mesh.uvs[t[1]].x + b[2] * mesh.uvs[t[2]].x;
      const double v = b[0] * mesh.uvs[t[0]].y + b[1] * mesh.uvs[t[1]].y + b[2] * mesh.uvs[t[2]].y;
      const auto c = sample_bilinear(atlas, u, v);
      std::copy(c.begin(), c.end(), img.at(x, y));
    }
  }
  return img;
}

RgbImage render_colors(const TriMesh& mesh, const PinholeCamera& cam, const SurfaceColor& color,
                       std::array<float, 3> background, const RasterOptions& opt) {
  const FrameBuffer fb = rasterize(mesh, cam, opt);
  RgbImage img(fb.width, fb.height, background);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < fb.height; ++y) {
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = fb.index(x, y);
      if (!fb.covered(i)) continue;
      const auto c = color(fb.tri[i], surface_point(fb, mesh, i));
      std::copy(c.begin(), c.end(), img.at(x, y));
    }
  }
  return img;
}

HeightMap ortho_height_raster(const TriMesh& mesh, int R) {
  if (R < 1) throw std::invalid_argument("R must be positive");
  mesh.validate();
  HeightMap out(R, -std::numeric_limits<double>::infinity(), false);
  const double cell = 2.0 / R;
  struct Flat {
    std::array<double, 3> x, y, z;
    double area;
    int u0, u1, v0, v1;
  };
  std::vector<Flat> flats;
  for (const auto& t : mesh.triangles) {
    Flat f;
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.vertices[t[k]];
      f.x[k] = p.x;
      f.y[k] = p.y;
      f.z[k] = p.z;
    }
    f.area = (f.x[1] - f.x[0]) * (f.y[2] - f.y[0]) - (f.x[2] - f.x[0]) * (f.y[1] - f.y[0]);
    if (f.area == 0.0) continue;  // vertical in xy
    auto lo = [&](double a) { return std::max(0, static_cast<int>(std::ceil((a + 1.0) / cell - 0.5))); };
    auto hi = [&](double a) { return std::min(R - 1, static_cast<int>(std::floor((a + 1.0) / cell - 0.5))); };
    f.u0 = lo(std::min({f.x[0], f.x[1], f.x[2]}));
    f.u1 = hi(std::max({f.x[0], f.x[1], f.x[2]}));
    f.v0 = lo(std::min({f.y[0], f.y[1], f.y[2]}));
    f.v1 = hi(std::max({f.y[0], f.y[1], f.y[2]}));
    if (f.u0 <= f.u1 && f.v0 <= f.v1) flats.push_back(f);
  }
  const int bands = (R + kBand - 1) / kBand;
  std::vector<std::vector<const Flat*>> bins(bands);
  for (const auto& f : flats) {
    for (int b = f.v0 / kBand; b <= f.v1 / kBand; ++b) bins[b].push_back(&f);
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < bands; ++b) {
    const int vlo = b * kBand, vhi = std::min(R - 1, vlo + kBand - 1);
    for (const Flat* f : bins[b]) {
      for (int v = std::max(vlo, f->v0); v <= std::min(vhi, f->v1); ++v) {
        const double py = out.cell_center(v);
        for (int u = f->u0; u <= f->u1; ++u) {
          const double px = out.cell_center(u);
          auto edge = [&](int a, int c) {
            return (f->x[c] - f->x[a]) * (py - f->y[a]) - (f->y[c] - f->y[a]) * (px - f->x[a]);
          };
          const double b0 = edge(1, 2) / f->area, b1 = edge(2, 0) / f->area, b2 = edge(0, 1) / f->area;
          if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;
          const double z = b0 * f->z[0] + b1 * f->z[1] + b2 * f->z[2];
          const auto i = out.index(u, v);
          if (z > out.heights[i]) out.heights[i] = z;
          out.valid[i] = 1;
        }
      }
    }
  }
  for (std::size_t i = 0; i < out.heights.size(); ++i) {
    if (!out.valid[i]) out.heights[i] = 0.0;
  }
  return out;
}

}  // namespace zmono
