#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zmono/field.hpp"
#include "zmono/fit.hpp"
#include "zmono/geom.hpp"

namespace zmono {

struct WatertightReport {
  std::size_t boundary_edges = 0;      // used by one triangle
  std::size_t non_manifold_edges = 0;  // used by three or more
  std::size_t misoriented_edges = 0;   // two uses in the same direction
  std::size_t components = 0;
  long long euler = 0;                 // V - E + F
  bool watertight() const { return boundary_edges == 0 && non_manifold_edges == 0; }
  std::string to_json() const;
};

WatertightReport watertight_check(const TriMesh& mesh);

// res^3 samples at cell centers of `bounds`, value(i, j, k) at index (k * res + j) * res + i.
struct VoxelGrid {
  int res = 0;
  Bounds3 bounds{{-1, -1, -1}, {1, 1, 1}};
  std::vector<double> values;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * res + j) * res + i;
  }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 spacing() const { return bounds.extent() * (1.0 / res); }
  Vec3 position(int i, int j, int k) const;
};

VoxelGrid sample_sdf(const ZMonoField& field, int res);

// Marching cubes with a sign-only face rule, closed at the grid boundary by
// treating everything outside as positive. Normals point toward positive
// values. Returns an empty mesh when nothing crosses `iso`.
TriMesh marching_cubes(const VoxelGrid& grid, double iso = 0.0);

// Column max-height occupancy from the points (empty columns at ground
// level) turned into a +-1 field and meshed with marching_cubes.
TriMesh naive_mc_baseline(const PointCloud& cloud, int res);

// A 2.5D surface over a rectilinear lattice. Each cell carries its own four
// corner heights (c00, c10, c11, c01 counterclockwise from (xs[i], ys[j])),
// so neighbouring cells may disagree; vertical walls are inserted wherever
// they do, and a skirt plus bottom plate close the outer boundary.
struct LatticeSurface {
  std::vector<double> xs, ys;                 // strictly increasing
  std::vector<std::array<double, 4>> corner;  // (xs.size()-1) * (ys.size()-1), row-major in y
  double z_bottom = 0.0;
};

struct LatticeStats {
  std::size_t snapped_saddles = 0;  // vertices whose 4 corner heights were unified
  std::size_t wall_edges = 0;       // interior lattice edges that received a wall
};

TriMesh build_lattice_surface(LatticeSurface surface, double weld_tol = 1e-9,
                              LatticeStats* stats = nullptr);

// res x res height_of samples over `region` (default [-1, 1]^2), two
// triangles per cell, closed below at -1 - 2/(res-1). UVs are the
// normalized (x, y) mapped to [0, 1]^2.
TriMesh extract_height_mesh(const ZMonoField& field, int res,
                            const std::optional<Rect>& region = std::nullopt);

struct MergeReport {
  double max_seam_gap = 0.0;   // world units, largest height disagreement on a seam
  std::size_t seam_vertices = 0;
  std::size_t gap_vertices = 0;  // seam vertices whose gap exceeds the weld tolerance
  std::size_t snapped_saddles = 0;
  std::string to_json() const;
};

struct MergedMesh {
  TriMesh mesh;
  MergeReport report;
};

// Evaluates every tile on a shared world lattice (cells_per_tile cells per
// tile side over its core), keeps each tile's cells inside its core and
// joins neighbouring tiles with vertical seam walls where their heights
// differ by more than weld_tol.
MergedMesh merge_tiles(const std::vector<TileFit>& tiles, int cells_per_tile, double weld_tol = 1e-6);

// Composite world-space SDF of all tiles on a res^3 grid spanning the tile
// cores in xy and `zrange` in z, meshed with marching_cubes.
TriMesh extract_tiled_mc(const std::vector<TileFit>& tiles, int res, double zmin, double zmax);

}  // namespace zmono
