#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "zmono/mesh.hpp"

namespace zmono {
namespace {

// Corner c of a cube sits at (c & 1, (c >> 1) & 1, (c >> 2) & 1).
constexpr std::array<std::array<int, 2>, 12> kEdges{{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // along x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // along z
}};

// Faces as corner loops, counterclockwise seen from outside the cube.
constexpr std::array<std::array<int, 4>, 6> kFaces{{
    {0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6},
}};

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e) {
    if ((kEdges[e][0] == a && kEdges[e][1] == b) || (kEdges[e][0] == b && kEdges[e][1] == a)) return e;
  }
  return -1;
}

struct CaseTable {
  // Triangles as edge triples, per inside-corner mask.
  std::array<std::vector<std::array<std::uint8_t, 3>>, 256> tris;
};

// On every face, each crossing segment runs from the edge where the walk
// enters an inside corner to the edge where it leaves, so the outside is on
// its left seen from outside the cube. Faces with two diagonal inside
// corners cut each inside corner off on its own. Both rules depend on the
// face's corner signs only, so cubes sharing a face agree on its segments
// and traverse them in opposite directions. The segments chain into loops
// whose fans face toward the outside (positive) side.
CaseTable build_table() {
  CaseTable t;
  for (int mask = 0; mask < 256; ++mask) {
    auto inside = [&](int c) { return (mask >> c) & 1; };
    std::array<int, 12> next;
    next.fill(-1);
    for (const auto& f : kFaces) {
      std::array<int, 4> enter{}, leave{};
      int ne = 0, nl = 0;
      for (int k = 0; k < 4; ++k) {
        const int a = f[k], b = f[(k + 1) % 4];
        if (!inside(a) && inside(b)) enter[ne++] = k;
        if (inside(a) && !inside(b)) leave[nl++] = k;
      }
      // Pair each entry with the first exit after it along the walk.
      for (int p = 0; p < ne; ++p) {
        int best = -1;
        for (int d = 1; d < 4 && best < 0; ++d) {
          for (int q = 0; q < nl; ++q) {
            if (leave[q] == (enter[p] + d) % 4) best = leave[q];
          }
        }
        const int e0 = edge_between(f[enter[p]], f[(enter[p] + 1) % 4]);
        const int e1 = edge_between(f[best], f[(best + 1) % 4]);
        next[e0] = e1;
      }
    }
    std::array<bool, 12> seen{};
    for (int e = 0; e < 12; ++e) {
      if (next[e] < 0 || seen[e]) continue;
      std::vector<int> loop;
      for (int c = e; !seen[c]; c = next[c]) {
        seen[c] = true;
        loop.push_back(c);
      }
      for (std::size_t k = 1; k + 1 < loop.size(); ++k) {
        t.tris[mask].push_back({static_cast<std::uint8_t>(loop[0]), static_cast<std::uint8_t>(loop[k]),
                                static_cast<std::uint8_t>(loop[k + 1])});
      }
    }
  }
  return t;
}

const CaseTable& table() {
  static const CaseTable t = build_table();
  return t;
}

constexpr double kOutside = 1.0;

}  // namespace

TriMesh marching_cubes(const VoxelGrid& grid, double iso) {
  const int n = grid.res;
  if (n < 1 || grid.values.size() != static_cast<std::size_t>(n) * n * n) {
    throw std::invalid_argument("voxel grid size mismatch");
  }
  for (double v : grid.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite voxel value");
  }
  const CaseTable& tab = table();
  // Padded lattice: indices -1 .. n, values outside the grid are positive.
  const int p = n + 2;
  auto value = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return iso + kOutside;
    return grid.at(i, j, k);
  };
  auto edge_key = [&](int i, int j, int k, int axis) {
    return ((static_cast<std::uint64_t>(k + 1) * p + (j + 1)) * p + (i + 1)) * 3 + axis;
  };
  const Vec3 h = grid.spacing();
  auto point = [&](int i, int j, int k) {
    return Vec3{grid.bounds.min.x + (i + 0.5) * h.x, grid.bounds.min.y + (j + 0.5) * h.y,
                grid.bounds.min.z + (k + 0.5) * h.z};
  };

  struct Slab {
    std::vector<std::array<std::uint64_t, 3>> tris;
    std::vector<std::pair<std::uint64_t, Vec3>> verts;
  };
  std::vector<Slab> slabs(p - 1);
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = -1; k < n; ++k) {
    Slab& slab = slabs[k + 1];
    for (int j = -1; j < n; ++j) {
      for (int i = -1; i < n; ++i) {
        std::array<double, 8> v;
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = value(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          if (v[c] < iso) mask |= 1 << c;
        }
        if (mask == 0 || mask == 255) continue;
        for (const auto& tri : tab.tris[mask]) {
          std::array<std::uint64_t, 3> keys;
          for (int q = 0; q < 3; ++q) {
            const int e = tri[q];
            const int a = kEdges[e][0], b = kEdges[e][1];
            const int ai = i + (a & 1), aj = j + ((a >> 1) & 1), ak = k + ((a >> 2) & 1);
            const int axis = e / 4;
            keys[q] = edge_key(ai, aj, ak, axis);
            // Interpolate along the edge; keep clear of the corners so no
            // two edge vertices of one cube coincide.
            double t = (iso - v[a]) / (v[b] - v[a]);
            t = std::clamp(t, 1e-6, 1.0 - 1e-6);
            const Vec3 pa = point(ai, aj, ak);
            const Vec3 pb = point(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
            slab.verts.emplace_back(keys[q], pa + (pb - pa) * t);
          }
          slab.tris.push_back(keys);
        }
      }
    }
  }

  TriMesh mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> ids;
  for (const Slab& slab : slabs) {
    for (const auto& [key, pos] : slab.verts) {
      if (ids.emplace(key, static_cast<std::uint32_t>(mesh.vertices.size())).second) mesh.vertices.push_back(pos);
    }
    for (const auto& keys : slab.tris) mesh.triangles.push_back({ids[keys[0]], ids[keys[1]], ids[keys[2]]});
  }
  return mesh;
}

}  // namespace zmono
