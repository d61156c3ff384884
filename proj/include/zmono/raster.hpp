#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "zmono/camera.hpp"
#include "zmono/geom.hpp"
#include "zmono/heightmap.hpp"
#include "zmono/image.hpp"

namespace zmono {

// Visibility per pixel: the nearest triangle, its depth along the view
// axis and perspective-correct barycentrics. tri < 0 marks background.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::int32_t> tri;
  std::vector<std::array<float, 3>> bary;

  FrameBuffer() = default;
  FrameBuffer(int w, int h);
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool covered(std::size_t i) const { return tri[i] >= 0; }
  std::size_t covered_count() const;
};

struct RasterOptions {
  bool cull_backfaces = false;
};

// Pixel (x, y) samples its center (x + 0.5, y + 0.5). Equal depths go to the
// lower triangle id, so the result does not depend on processing order.
FrameBuffer rasterize(const TriMesh& mesh, const PinholeCamera& cam, const RasterOptions& opt = {});

// Per-pixel channels derived from a frame buffer. Background pixels take
// `background`.
GrayImage height_channel(const FrameBuffer& fb, const TriMesh& mesh, float background = 0.f);
// Unit face normals mapped to RGB as (n + 1) / 2.
RgbImage normal_channel(const FrameBuffer& fb, const TriMesh& mesh);
// (u, v, 0) per pixel; requires mesh UVs.
RgbImage uv_channel(const FrameBuffer& fb, const TriMesh& mesh);

// World position of the surface seen by pixel i.
Vec3 surface_point(const FrameBuffer& fb, const TriMesh& mesh, std::size_t i);

// Bilinear lookup with clamp-to-edge. u runs right, v runs down the image
// (row = v * height).
std::array<float, 3> sample_bilinear(const RgbImage& img, double u, double v);

RgbImage render_with_atlas(const TriMesh& mesh, const RgbImage& atlas, const PinholeCamera& cam,
                           std::array<float, 3> background = {0.f, 0.f, 0.f}, const RasterOptions& opt = {});

using SurfaceColor = std::function<std::array<float, 3>(std::int32_t tri, const Vec3& world)>;
RgbImage render_colors(const TriMesh& mesh, const PinholeCamera& cam, const SurfaceColor& color,
                       std::array<float, 3> background = {0.f, 0.f, 0.f}, const RasterOptions& opt = {});

// Top-down orthographic max-z raster of a normalized mesh on the R x R cell
// centers of [-1, 1]^2. Pixels no triangle covers are invalid.
HeightMap ortho_height_raster(const TriMesh& mesh, int R);

}  // namespace zmono
