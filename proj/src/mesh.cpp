#include "zmono/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace zmono {

std::string WatertightReport::to_json() const {
  nlohmann::json j{{"boundary_edges", boundary_edges},
                   {"non_manifold_edges", non_manifold_edges},
                   {"misoriented_edges", misoriented_edges},
                   {"components", components},
                   {"euler_characteristic", euler},
                   {"watertight", watertight()}};
  return j.dump(1);
}

std::string MergeReport::to_json() const {
  nlohmann::json j{{"max_seam_gap", max_seam_gap},
                   {"seam_vertices", seam_vertices},
                   {"gap_vertices", gap_vertices},
                   {"snapped_saddles", snapped_saddles}};
  return j.dump(1);
}

namespace {

std::size_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t a) {
  while (parent[a] != a) {
    parent[a] = parent[parent[a]];
    a = parent[a];
  }
  return a;
}

}  // namespace

WatertightReport watertight_check(const TriMesh& mesh) {
  mesh.validate();
  // (low, high, forward) per directed use; sorting groups uses of an edge.
  struct Use {
    std::uint32_t lo, hi;
    bool fwd;
  };
  std::vector<Use> uses;
  uses.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = t[e], b = t[(e + 1) % 3];
      uses.push_back({std::min(a, b), std::max(a, b), a < b});
    }
  }
  std::sort(uses.begin(), uses.end(), [](const Use& p, const Use& q) {
    return p.lo != q.lo ? p.lo < q.lo : (p.hi != q.hi ? p.hi < q.hi : p.fwd < q.fwd);
  });
  WatertightReport r;
  std::size_t edges = 0;
  for (std::size_t i = 0; i < uses.size();) {
    std::size_t j = i;
    while (j < uses.size() && uses[j].lo == uses[i].lo && uses[j].hi == uses[i].hi) ++j;
    const std::size_t deg = j - i;
    ++edges;
    if (deg == 1) ++r.boundary_edges;
    if (deg >= 3) ++r.non_manifold_edges;
    if (deg == 2 && uses[i].fwd == uses[i + 1].fwd) ++r.misoriented_edges;
    i = j;
  }
  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  std::vector<std::uint8_t> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.triangles) {
    used[t[0]] = used[t[1]] = used[t[2]] = 1;
    for (int e = 1; e < 3; ++e) {
      const auto a = find_root(parent, t[0]), b = find_root(parent, t[e]);
      if (a != b) parent[std::max(a, b)] = static_cast<std::uint32_t>(std::min(a, b));
    }
  }
  for (std::uint32_t v = 0; v < parent.size(); ++v) {
    if (used[v] && find_root(parent, v) == v) ++r.components;
  }
  r.euler = static_cast<long long>(mesh.vertices.size()) - static_cast<long long>(edges) +
            static_cast<long long>(mesh.triangles.size());
  return r;
}

Vec3 VoxelGrid::position(int i, int j, int k) const {
  const Vec3 h = spacing();
  return {bounds.min.x + (i + 0.5) * h.x, bounds.min.y + (j + 0.5) * h.y, bounds.min.z + (k + 0.5) * h.z};
}

VoxelGrid sample_sdf(const ZMonoField& field, int res) {
  if (res < 8) throw std::invalid_argument("voxel grid needs res >= 8");
  VoxelGrid g;
  g.res = res;
  g.values.resize(static_cast<std::size_t>(res) * res * res);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const Vec3 p = g.position(i, j, 0);
      const NeighborWeights nw = neighbor_weights(field, p.x, p.y);
      for (int k = 0; k < res; ++k) g.values[g.index(i, j, k)] = eval_curve(field, nw, g.position(i, j, k).z).f;
    }
  }
  return g;
}

TriMesh naive_mc_baseline(const PointCloud& cloud, int res) {
  if (res < 8) throw std::invalid_argument("voxel grid needs res >= 8");
  if (cloud.empty()) throw std::invalid_argument("empty input");
  std::vector<double> top(static_cast<std::size_t>(res) * res, -std::numeric_limits<double>::infinity());
  for (const auto& p : cloud.points) {
    const int i = std::clamp(static_cast<int>(std::floor((p.x + 1.0) * 0.5 * res)), 0, res - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y + 1.0) * 0.5 * res)), 0, res - 1);
    auto& t = top[static_cast<std::size_t>(j) * res + i];
    t = std::max(t, p.z);
  }
  double ground = std::numeric_limits<double>::infinity();
  for (double t : top) {
    if (std::isfinite(t)) ground = std::min(ground, t);
  }
  for (double& t : top) {
    if (!std::isfinite(t)) t = ground;
  }
  VoxelGrid g;
  g.res = res;
  g.values.resize(static_cast<std::size_t>(res) * res * res);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < res; ++k) {
    const double z = g.position(0, 0, k).z;
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) {
        g.values[g.index(i, j, k)] = z <= top[static_cast<std::size_t>(j) * res + i] ? -1.0 : 1.0;
      }
    }
  }
  return marching_cubes(g, 0.0);
}

namespace {

// Distinct heights stacked on one lattice vertex (at most the four
// neighbouring cell corners plus nothing else: the bottom only appears as
// an outside cell's corner).
struct Stack {
  std::array<double, 4> h{};
  std::uint8_t n = 0;
  std::uint32_t first = 0;
};

}  // namespace

TriMesh build_lattice_surface(LatticeSurface s, double tol, LatticeStats* stats) {
  const int nx = static_cast<int>(s.xs.size()), ny = static_cast<int>(s.ys.size());
  if (nx < 2 || ny < 2) throw std::invalid_argument("lattice needs at least 2 x 2 vertices");
  const int cx = nx - 1, cy = ny - 1;
  if (s.corner.size() != static_cast<std::size_t>(cx) * cy) throw std::invalid_argument("corner array size mismatch");
  for (int a = 1; a < nx; ++a) {
    if (!(s.xs[a] > s.xs[a - 1])) throw std::invalid_argument("lattice xs must be strictly increasing");
  }
  for (int b = 1; b < ny; ++b) {
    if (!(s.ys[b] > s.ys[b - 1])) throw std::invalid_argument("lattice ys must be strictly increasing");
  }
  for (const auto& c : s.corner) {
    for (double h : c) {
      if (!std::isfinite(h)) throw std::invalid_argument("non-finite corner height");
      if (h < s.z_bottom) throw std::invalid_argument("corner height below the bottom plate");
    }
  }
  LatticeStats local;
  LatticeStats& st = stats ? *stats : local;
  st = {};

  // Corner slot of cell (i, j) touching vertex (a, b).
  static constexpr int kSlot[2][2] = {{0, 3}, {1, 2}};
  auto corner_ref = [&](int i, int j, int a, int b) -> double* {
    if (i < 0 || j < 0 || i >= cx || j >= cy) return nullptr;
    return &s.corner[static_cast<std::size_t>(j) * cx + i][kSlot[a - i][b - j]];
  };
  auto corner_at = [&](int i, int j, int a, int b) {
    const double* p = corner_ref(i, j, a, b);
    return p ? *p : s.z_bottom;
  };
  auto quad = [&](int a, int b) {
    return std::array<double*, 4>{corner_ref(a - 1, b - 1, a, b), corner_ref(a, b - 1, a, b), corner_ref(a, b, a, b),
                                  corner_ref(a - 1, b, a, b)};
  };

  // Alternating corner heights around a vertex would put four walls on one
  // vertical segment; unify them instead.
  for (int b = 1; b < ny - 1; ++b) {
    for (int a = 1; a < nx - 1; ++a) {
      auto q = quad(a, b);
      const double q0 = *q[0], q1 = *q[1], q2 = *q[2], q3 = *q[3];
      if (std::min(q0, q2) > std::max(q1, q3) + tol || std::min(q1, q3) > std::max(q0, q2) + tol) {
        const double m = 0.25 * (q0 + q1 + q2 + q3);
        for (double* p : q) *p = m;
        ++st.snapped_saddles;
      }
    }
  }

  TriMesh mesh;
  std::vector<Stack> stacks(static_cast<std::size_t>(nx) * ny);
  for (int b = 0; b < ny; ++b) {
    for (int a = 0; a < nx; ++a) {
      auto q = quad(a, b);
      std::array<double, 4> v;
      for (int t = 0; t < 4; ++t) v[t] = q[t] ? *q[t] : s.z_bottom;
      std::sort(v.begin(), v.end());
      Stack& sk = stacks[static_cast<std::size_t>(b) * nx + a];
      for (double h : v) {
        if (sk.n == 0 || h - sk.h[sk.n - 1] > tol) sk.h[sk.n++] = h;
      }
      sk.first = static_cast<std::uint32_t>(mesh.vertices.size());
      for (int t = 0; t < sk.n; ++t) mesh.vertices.push_back({s.xs[a], s.ys[b], sk.h[t]});
    }
  }
  auto slot = [&](int a, int b, double h) {
    const Stack& sk = stacks[static_cast<std::size_t>(b) * nx + a];
    int best = 0;
    for (int t = 1; t < sk.n; ++t) {
      if (std::abs(sk.h[t] - h) < std::abs(sk.h[best] - h)) best = t;
    }
    return best;
  };
  auto vid = [&](int a, int b, int t) { return stacks[static_cast<std::size_t>(b) * nx + a].first + static_cast<std::uint32_t>(t); };

  for (int j = 0; j < cy; ++j) {
    for (int i = 0; i < cx; ++i) {
      const auto& c = s.corner[static_cast<std::size_t>(j) * cx + i];
      const auto p00 = vid(i, j, slot(i, j, c[0]));
      const auto p10 = vid(i + 1, j, slot(i + 1, j, c[1]));
      const auto p11 = vid(i + 1, j + 1, slot(i + 1, j + 1, c[2]));
      const auto p01 = vid(i, j + 1, slot(i, j + 1, c[3]));
      mesh.triangles.push_back({p00, p10, p11});
      mesh.triangles.push_back({p00, p11, p01});
    }
  }

  // Wall on the lattice edge V -> W between the cell on its left (L) and
  // on its right (R). The left cell's top runs V -> W, so the wall loop is
  // W(L) -> V(L) .. V(R) -> W(R) .. W(L), zipped into triangles.
  auto wall = [&](int va, int vb, int wa, int wb, double hlv, double hrv, double hlw, double hrw, bool interior) {
    const Stack& sv = stacks[static_cast<std::size_t>(vb) * nx + va];
    const Stack& sw = stacks[static_cast<std::size_t>(wb) * nx + wa];
    const int a0 = slot(va, vb, hlv), a1 = slot(va, vb, hrv);
    const int b0 = slot(wa, wb, hlw), b1 = slot(wa, wb, hrw);
    if (a0 == a1 && b0 == b1) return;
    if (interior) ++st.wall_edges;
    const int m = std::abs(a1 - a0), n = std::abs(b1 - b0);
    const int da = a1 >= a0 ? 1 : -1, db = b1 >= b0 ? 1 : -1;
    auto progress = [](const Stack& sk, int first, int last, int at) {
      return first == last ? 0.0 : (sk.h[at] - sk.h[first]) / (sk.h[last] - sk.h[first]);
    };
    int i = 0, j = 0;
    while (i < m || j < n) {
      const int ai = a0 + i * da, bj = b0 + j * db;
      const bool step_a = j == n || (i < m && progress(sv, a0, a1, ai + da) <= progress(sw, b0, b1, bj + db));
      if (step_a) {
        mesh.triangles.push_back({vid(wa, wb, bj), vid(va, vb, ai), vid(va, vb, ai + da)});
        ++i;
      } else {
        mesh.triangles.push_back({vid(wa, wb, bj), vid(va, vb, ai), vid(wa, wb, bj + db)});
        ++j;
      }
    }
  };

  for (int b = 0; b < ny; ++b) {
    for (int a = 0; a < cx; ++a) {
      // V = (a, b) -> W = (a + 1, b) along +x: left is the cell above.
      wall(a, b, a + 1, b, corner_at(a, b, a, b), corner_at(a, b - 1, a, b), corner_at(a, b, a + 1, b),
           corner_at(a, b - 1, a + 1, b), b > 0 && b < cy);
    }
  }
  for (int a = 0; a < nx; ++a) {
    for (int b = 0; b < cy; ++b) {
      // V = (a, b) -> W = (a, b + 1) along +y: left is the cell at -x.
      wall(a, b, a, b + 1, corner_at(a - 1, b, a, b), corner_at(a, b, a, b), corner_at(a - 1, b, a, b + 1),
           corner_at(a, b, a, b + 1), a > 0 && a < cx);
    }
  }

  // Bottom plate: fan around a center vertex, facing down.
  std::vector<std::uint32_t> ring;
  auto bottom_of = [&](int a, int b) { return vid(a, b, slot(a, b, s.z_bottom)); };
  for (int a = 0; a < nx - 1; ++a) ring.push_back(bottom_of(a, 0));
  for (int b = 0; b < ny - 1; ++b) ring.push_back(bottom_of(nx - 1, b));
  for (int a = nx - 1; a > 0; --a) ring.push_back(bottom_of(a, ny - 1));
  for (int b = ny - 1; b > 0; --b) ring.push_back(bottom_of(0, b));
  const auto center = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.push_back({0.5 * (s.xs.front() + s.xs.back()), 0.5 * (s.ys.front() + s.ys.back()), s.z_bottom});
  for (std::size_t k = 0; k < ring.size(); ++k) {
    mesh.triangles.push_back({center, ring[(k + 1) % ring.size()], ring[k]});
  }
  return mesh;
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  v.back() = b;
  return v;
}

}  // namespace

TriMesh extract_height_mesh(const ZMonoField& field, int res, const std::optional<Rect>& region) {
  if (res < 2) throw std::invalid_argument("extract_height_mesh needs res >= 2");
  const Rect r = region.value_or(Rect{-1.0, -1.0, 1.0, 1.0});
  if (!(r.x1 > r.x0 && r.y1 > r.y0)) throw std::invalid_argument("empty extraction region");
  LatticeSurface s;
  s.xs = linspace(r.x0, r.x1, res);
  s.ys = linspace(r.y0, r.y1, res);
  s.z_bottom = -1.0 - 2.0 / (res - 1);
  std::vector<double> h(static_cast<std::size_t>(res) * res);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < res; ++b) {
    for (int a = 0; a < res; ++a) {
      h[static_cast<std::size_t>(b) * res + a] =
          height_of(field, std::clamp(s.xs[a], -1.0, 1.0), std::clamp(s.ys[b], -1.0, 1.0));
    }
  }
  const int c = res - 1;
  s.corner.resize(static_cast<std::size_t>(c) * c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < c; ++i) {
      auto H = [&](int a, int b) { return h[static_cast<std::size_t>(b) * res + a]; };
      s.corner[static_cast<std::size_t>(j) * c + i] = {H(i, j), H(i + 1, j), H(i + 1, j + 1), H(i, j + 1)};
    }
  }
  TriMesh m = build_lattice_surface(std::move(s));
  m.uvs.reserve(m.vertices.size());
  for (const auto& v : m.vertices) m.uvs.push_back({0.5 * (v.x + 1.0), 0.5 * (v.y + 1.0)});
  return m;
}

namespace {

struct TileGrid {
  int tiles = 0;
  std::vector<const TileFit*> at;  // by iy * tiles + ix
};

TileGrid arrange_tiles(const std::vector<TileFit>& tiles) {
  TileGrid g;
  const auto n = tiles.size();
  g.tiles = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (n == 0 || static_cast<std::size_t>(g.tiles) * g.tiles != n) {
    throw std::invalid_argument("expected tiles x tiles fits, got " + std::to_string(n));
  }
  g.at.assign(n, nullptr);
  for (const auto& t : tiles) {
    if (t.ix < 0 || t.iy < 0 || t.ix >= g.tiles || t.iy >= g.tiles) throw std::invalid_argument("tile index out of range");
    auto& slot = g.at[static_cast<std::size_t>(t.iy) * g.tiles + t.ix];
    if (slot) throw std::invalid_argument("duplicate tile index");
    slot = &t;
  }
  return g;
}

double tile_height(const TileFit& t, double x, double y) {
  const Vec3 q = t.transform.to_normalized({x, y, 0.0});
  const double z = height_of(t.field, std::clamp(q.x, -1.0, 1.0), std::clamp(q.y, -1.0, 1.0));
  return t.transform.to_world({0.0, 0.0, z}).z;
}

}  // namespace

MergedMesh merge_tiles(const std::vector<TileFit>& tiles, int m, double weld_tol) {
  if (m < 1) throw std::invalid_argument("cells_per_tile must be >= 1");
  const TileGrid g = arrange_tiles(tiles);
  const int T = g.tiles;
  // Shared lattice: m cells per tile along each axis, tile edges exact.
  std::vector<double> xs, ys;
  for (int t = 0; t < T; ++t) {
    const Rect& cx = g.at[t]->core;
    const Rect& cy = g.at[static_cast<std::size_t>(t) * T]->core;
    for (int a = 0; a < m; ++a) {
      xs.push_back(cx.x0 + (cx.x1 - cx.x0) * a / m);
      ys.push_back(cy.y0 + (cy.y1 - cy.y0) * a / m);
    }
  }
  xs.push_back(g.at[T - 1]->core.x1);
  ys.push_back(g.at[static_cast<std::size_t>(T - 1) * T]->core.y1);
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());

  // Per tile, heights at its own (m+1)^2 lattice vertices.
  const int nv = m + 1;
  std::vector<std::vector<double>> th(tiles.size());
  for (int ti = 0; ti < T * T; ++ti) {
    const TileFit& t = *g.at[ti];
    auto& h = th[ti];
    h.resize(static_cast<std::size_t>(nv) * nv);
    const int ox = t.ix * m, oy = t.iy * m;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < nv; ++b) {
      for (int a = 0; a < nv; ++a) h[static_cast<std::size_t>(b) * nv + a] = tile_height(t, xs[ox + a], ys[oy + b]);
    }
  }

  MergedMesh out;
  std::vector<double> vmin(static_cast<std::size_t>(nx) * ny, std::numeric_limits<double>::infinity());
  std::vector<double> vmax(vmin.size(), -std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> owners(vmin.size(), 0);
  double lowest = std::numeric_limits<double>::infinity();
  double floor = std::numeric_limits<double>::infinity();
  for (int ti = 0; ti < T * T; ++ti) {
    const TileFit& t = *g.at[ti];
    floor = std::min(floor, t.transform.to_world({0.0, 0.0, -1.0}).z);
    for (int b = 0; b < nv; ++b) {
      for (int a = 0; a < nv; ++a) {
        const std::size_t gv = static_cast<std::size_t>(t.iy * m + b) * nx + (t.ix * m + a);
        const double h = th[ti][static_cast<std::size_t>(b) * nv + a];
        vmin[gv] = std::min(vmin[gv], h);
        vmax[gv] = std::max(vmax[gv], h);
        ++owners[gv];
        lowest = std::min(lowest, h);
      }
    }
  }
  for (std::size_t v = 0; v < owners.size(); ++v) {
    if (owners[v] < 2) continue;
    ++out.report.seam_vertices;
    const double gap = vmax[v] - vmin[v];
    out.report.max_seam_gap = std::max(out.report.max_seam_gap, gap);
    if (gap > weld_tol) ++out.report.gap_vertices;
  }

  LatticeSurface s;
  s.xs = xs;
  s.ys = ys;
  // The tiles' common domain floor, pushed lower only if a surface reaches it.
  const double dz = std::max(1e-6, 1e-3 * std::max(xs.back() - xs.front(), ys.back() - ys.front()));
  s.z_bottom = lowest - floor > dz ? floor : lowest - dz;
  s.corner.resize(static_cast<std::size_t>(nx - 1) * (ny - 1));
  for (int j = 0; j < ny - 1; ++j) {
    for (int i = 0; i < nx - 1; ++i) {
      const int ti = (j / m) * T + (i / m);
      const auto& h = th[ti];
      const int a = i % m, b = j % m;
      auto H = [&](int da, int db) { return h[static_cast<std::size_t>(b + db) * nv + (a + da)]; };
      s.corner[static_cast<std::size_t>(j) * (nx - 1) + i] = {H(0, 0), H(1, 0), H(1, 1), H(0, 1)};
    }
  }
  LatticeStats st;
  out.mesh = build_lattice_surface(std::move(s), weld_tol, &st);
  out.report.snapped_saddles = st.snapped_saddles;
  return out;
}

TriMesh extract_tiled_mc(const std::vector<TileFit>& tiles, int res, double zmin, double zmax) {
  if (res < 8) throw std::invalid_argument("voxel grid needs res >= 8");
  if (!(zmax > zmin)) throw std::invalid_argument("empty z range");
  const TileGrid g = arrange_tiles(tiles);
  const int T = g.tiles;
  VoxelGrid grid;
  grid.res = res;
  grid.bounds.min = {g.at[0]->core.x0, g.at[0]->core.y0, zmin};
  grid.bounds.max = {g.at[T - 1]->core.x1, g.at[static_cast<std::size_t>(T - 1) * T]->core.y1, zmax};
  grid.values.resize(static_cast<std::size_t>(res) * res * res);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const Vec3 p = grid.position(i, j, 0);
      const TileFit* owner = g.at.back();
      for (const TileFit* t : g.at) {
        if (t->core.contains(p.x, p.y)) {
          owner = t;
          break;
        }
      }
      const Vec3 q = owner->transform.to_normalized(p);
      const NeighborWeights nw = neighbor_weights(owner->field, std::clamp(q.x, -1.0, 1.0), std::clamp(q.y, -1.0, 1.0));
      for (int k = 0; k < res; ++k) {
        const double z = owner->transform.to_normalized(grid.position(i, j, k)).z;
        grid.values[grid.index(i, j, k)] = eval_curve(owner->field, nw, std::clamp(z, -1.0, 1.0)).f;
      }
    }
  }
  return marching_cubes(grid, 0.0);
}

}  // namespace zmono
