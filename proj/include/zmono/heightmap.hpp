#pragma once

#include <cstdint>
#include <vector>

namespace zmono {

// R x R grid over the normalized square [-1, 1]^2. Cell (u, v) covers
// x in [-1 + 2u/R, -1 + 2(u+1)/R), u along x and v along y. Heights are in
// normalized z; invalid cells carry no observation.
struct HeightMap {
  int res = 0;
  std::vector<double> heights;
  std::vector<std::uint8_t> valid;

  HeightMap() = default;
  explicit HeightMap(int r, double fill = 0.0, bool all_valid = false)
      : res(r),
        heights(static_cast<std::size_t>(r) * r, fill),
        valid(static_cast<std::size_t>(r) * r, all_valid ? 1 : 0) {}

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * res + u; }
  double& at(int u, int v) { return heights[index(u, v)]; }
  double at(int u, int v) const { return heights[index(u, v)]; }
  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }

  double cell_center(int i) const { return -1.0 + (i + 0.5) * 2.0 / res; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto b : valid) n += b;
    return n;
  }
  double valid_fraction() const {
    return valid.empty() ? 0.0 : static_cast<double>(valid_count()) / static_cast<double>(valid.size());
  }
};

}  // namespace zmono
