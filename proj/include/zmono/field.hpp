#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zmono/geom.hpp"
#include "zmono/heightmap.hpp"

namespace zmono {

inline constexpr int kMaxWindow = 7;
inline constexpr int kMaxTaps = kMaxWindow * kMaxWindow;
inline constexpr double kDefaultSharpness = 80.0;

// Z-monotonic signed distance field. Each grid cell holds the vertical
// offset h of a tanh basis curve; a query blends the curves of the
// window x window cells around it:
//
//   s(x, y, z) = sum_j w_j(x, y) * tanh(k * (z - h_j)),  w_j >= 0, sum w_j = 1
//
// so s is nondecreasing in z everywhere. Negative below the surface.
struct ZMonoField {
  int grid_res = 256;
  double sharpness = kDefaultSharpness;
  int window = 3;
  std::vector<double> h;  // grid_res^2, row-major h[j * G + i], i along x

  ZMonoField() = default;
  ZMonoField(int g, double k = kDefaultSharpness, int n = 3, double fill = 0.0);

  double& at(int i, int j) { return h[static_cast<std::size_t>(j) * grid_res + i]; }
  double at(int i, int j) const { return h[static_cast<std::size_t>(j) * grid_res + i]; }
  double cell_center(int i) const { return -1.0 + (i + 0.5) * 2.0 / grid_res; }
  void validate() const;
};

struct NeighborWeights {
  std::array<std::uint32_t, kMaxTaps> cells{};  // flat grid indices
  std::array<double, kMaxTaps> w{};
  int count = 0;
};

// Softmax over 1 / (d_j + 1e-6), d_j the xy distance to cell center j in
// grid-cell units. The window is shifted inward at the borders so it always
// holds window^2 in-bounds cells. Throws on queries outside [-1, 1]^2.
NeighborWeights neighbor_weights(const ZMonoField& field, double x, double y);

double eval_sdf(const ZMonoField& field, const Vec3& p);

// f and df/dz for a prepared set of weights.
struct CurveValue {
  double f = 0.0;
  double dfdz = 0.0;
};
CurveValue eval_curve(const ZMonoField& field, const NeighborWeights& nw, double z);

struct HeightRoot {
  double z = 0.0;
  bool clamped = false;  // true when the root left [-1, 1]; z is then -1 or +1
};

// Zero crossing of the monotone curve at (x, y): safeguarded Newton inside
// a shrinking bisection bracket on [-1, 1]. `guess` warm-starts Newton.
HeightRoot solve_height(const ZMonoField& field, const NeighborWeights& nw,
                        std::optional<double> guess = std::nullopt);
double height_of(const ZMonoField& field, double x, double y);

struct HeightGradient {
  NeighborWeights taps;         // cells and their dz*/dh_j (in .w)
  bool clamped = false;         // plateau root: all gradients are zero
};

// Implicit differentiation of f(z*; h) = 0:
//   dz*/dh_j = w_j sech^2(k(z* - h_j)) / sum_m w_m sech^2(k(z* - h_m))
HeightGradient grad_height(const ZMonoField& field, double x, double y);
HeightGradient grad_height(const ZMonoField& field, const NeighborWeights& nw, const HeightRoot& root);

// Heights at the R x R cell centers (all valid). Parallel over rows.
HeightMap height_grid(const ZMonoField& field, int R);

// sech^2 without overflow for large |a|.
double sech2(double a);

// Checkpoint: "ZMSDFCK1" magic, uint32 version, int32 G, float64 k, int32 window,
// then G^2 float64 row-major (little-endian).
void write_field(const ZMonoField& field, const std::string& path);
ZMonoField read_field(const std::string& path);

}  // namespace zmono
