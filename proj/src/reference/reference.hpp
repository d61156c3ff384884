#pragma once

// Serial, deliberately plain versions of the parallel kernels. Tests compare
// against them and the benchmarks time both.

#include <cstdint>
#include <vector>

#include "zmono/camera.hpp"
#include "zmono/field.hpp"
#include "zmono/geom.hpp"
#include "zmono/heightmap.hpp"
#include "zmono/image.hpp"
#include "zmono/losses.hpp"
#include "zmono/mesh.hpp"
#include "zmono/raster.hpp"

namespace zmono::ref {

// Plain bisection (80 halvings of [-1, 1]) on the blended curve.
double height_of(const ZMonoField& field, double x, double y);
HeightMap height_grid(const ZMonoField& field, int R);

VoxelGrid sample_sdf(const ZMonoField& field, int res);

LossTerm loss_height(const HeightMap& pred, const HeightMap& target);
LossTerm loss_laplacian(const HeightMap& pred);
LossTerm loss_normal_tv(const HeightMap& pred);

// Every pixel tests every triangle. Triangles crossing the near plane are
// rejected with std::invalid_argument.
FrameBuffer rasterize(const TriMesh& mesh, const PinholeCamera& cam, const RasterOptions& opt = {});

HeightMap ortho_height_raster(const TriMesh& mesh, int R);

// O(n m) scan; ties go to the lower index.
std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to);

// Direct per-window sums, no separable filtering.
double ssim(const RgbImage& a, const RgbImage& b, const std::vector<std::uint8_t>* mask = nullptr);

}  // namespace zmono::ref
