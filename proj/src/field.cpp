#include "zmono/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace zmono {
namespace {

constexpr double kDomainSlack = 1e-12;
constexpr double kDistanceEps = 1e-6;
constexpr double kRootTol = 1e-12;
constexpr int kMaxRootIters = 100;

void check_xy(double x, double y) {
  if (!(std::abs(x) <= 1.0 + kDomainSlack && std::abs(y) <= 1.0 + kDomainSlack)) {
    throw std::domain_error("query (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") outside [-1, 1]^2");
  }
}

}  // namespace

ZMonoField::ZMonoField(int g, double k, int n, double fill)
    : grid_res(g), sharpness(k), window(n), h(static_cast<std::size_t>(g) * g, fill) {
  validate();
}

void ZMonoField::validate() const {
  if (grid_res < 1) throw std::invalid_argument("grid_res must be positive");
  if (!(sharpness > 0.0)) throw std::invalid_argument("sharpness k must be > 0");
  if (window < 1 || window % 2 == 0 || window > kMaxWindow) {
    throw std::invalid_argument("window must be odd and <= " + std::to_string(kMaxWindow));
  }
  if (window > grid_res) throw std::invalid_argument("window larger than grid");
  if (h.size() != static_cast<std::size_t>(grid_res) * grid_res) {
    throw std::invalid_argument("grid size mismatch");
  }
}

double sech2(double a) {
  const double e = std::exp(-2.0 * std::abs(a));
  const double d = 1.0 + e;
  return 4.0 * e / (d * d);
}

NeighborWeights neighbor_weights(const ZMonoField& field, double x, double y) {
  check_xy(x, y);
  const int G = field.grid_res;
  const int n = field.window;
  const double cell = 2.0 / G;
  const int ci = std::clamp(static_cast<int>(std::floor((x + 1.0) / cell)), 0, G - 1);
  const int cj = std::clamp(static_cast<int>(std::floor((y + 1.0) / cell)), 0, G - 1);
  const int i0 = std::clamp(ci - n / 2, 0, G - n);
  const int j0 = std::clamp(cj - n / 2, 0, G - n);

  NeighborWeights nw;
  nw.count = n * n;
  double logits[kMaxTaps];
  double max_logit = -1.0;
  int t = 0;
  for (int j = j0; j < j0 + n; ++j) {
    for (int i = i0; i < i0 + n; ++i, ++t) {
      const double dx = (x - field.cell_center(i)) / cell;
      const double dy = (y - field.cell_center(j)) / cell;
      logits[t] = 1.0 / (std::sqrt(dx * dx + dy * dy) + kDistanceEps);
      max_logit = std::max(max_logit, logits[t]);
      nw.cells[t] = static_cast<std::uint32_t>(j * G + i);
    }
  }
  double sum = 0.0;
  for (t = 0; t < nw.count; ++t) {
    nw.w[t] = std::exp(logits[t] - max_logit);
    sum += nw.w[t];
  }
  for (t = 0; t < nw.count; ++t) nw.w[t] /= sum;
  return nw;
}

CurveValue eval_curve(const ZMonoField& field, const NeighborWeights& nw, double z) {
  const double k = field.sharpness;
  CurveValue out;
  for (int t = 0; t < nw.count; ++t) {
    const double th = std::tanh(k * (z - field.h[nw.cells[t]]));
    out.f += nw.w[t] * th;
    out.dfdz += nw.w[t] * k * (1.0 - th * th);  // only steers Newton; may round to 0
  }
  out.f = std::clamp(out.f, -1.0, 1.0);  // normalized weights can sum to 1 + ulp
  return out;
}

double eval_sdf(const ZMonoField& field, const Vec3& p) {
  if (!(std::abs(p.z) <= 1.0 + kDomainSlack)) {
    throw std::domain_error("query z = " + std::to_string(p.z) + " outside [-1, 1]");
  }
  return eval_curve(field, neighbor_weights(field, p.x, p.y), p.z).f;
}

HeightRoot solve_height(const ZMonoField& field, const NeighborWeights& nw, std::optional<double> guess) {
  double lo = -1.0, hi = 1.0;
  if (eval_curve(field, nw, lo).f >= 0.0) return {-1.0, true};
  if (eval_curve(field, nw, hi).f <= 0.0) return {1.0, true};

  double z;
  if (guess && *guess > lo && *guess < hi) {
    z = *guess;
  } else {
    z = 0.0;
    for (int t = 0; t < nw.count; ++t) z += nw.w[t] * field.h[nw.cells[t]];
    z = std::clamp(z, -0.999, 0.999);
  }
  for (int it = 0; it < kMaxRootIters; ++it) {
    const CurveValue c = eval_curve(field, nw, z);
    if (std::abs(c.f) < kRootTol) break;
    if (c.f < 0.0) {
      lo = z;
    } else {
      hi = z;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) break;
    const double newton = c.dfdz > 0.0 ? z - c.f / c.dfdz : lo - 1.0;
    // Newton must shrink the bracket; otherwise bisect.
    z = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  return {z, false};
}

double height_of(const ZMonoField& field, double x, double y) {
  return solve_height(field, neighbor_weights(field, x, y)).z;
}

HeightGradient grad_height(const ZMonoField& field, const NeighborWeights& nw, const HeightRoot& root) {
  HeightGradient g;
  g.taps.cells = nw.cells;
  g.taps.count = nw.count;
  g.clamped = root.clamped;
  if (root.clamped) {
    g.taps.w.fill(0.0);
    return g;
  }
  const double k = field.sharpness;
  double denom = 0.0;
  for (int t = 0; t < nw.count; ++t) {
    g.taps.w[t] = nw.w[t] * sech2(k * (root.z - field.h[nw.cells[t]]));
    denom += g.taps.w[t];
  }
  for (int t = 0; t < nw.count; ++t) g.taps.w[t] /= denom;
  return g;
}

HeightGradient grad_height(const ZMonoField& field, double x, double y) {
  const NeighborWeights nw = neighbor_weights(field, x, y);
  return grad_height(field, nw, solve_height(field, nw));
}

HeightMap height_grid(const ZMonoField& field, int R) {
  if (R < 2) throw std::invalid_argument("height_grid needs R >= 2");
  HeightMap out(R, 0.0, true);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < R; ++v) {
    const double y = out.cell_center(v);
    for (int u = 0; u < R; ++u) {
      out.at(u, v) = height_of(field, out.cell_center(u), y);
    }
  }
  return out;
}

void write_field(const ZMonoField& field, const std::string& path) {
  field.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char magic[8] = {'Z', 'M', 'S', 'D', 'F', 'C', 'K', '1'};
  const std::uint32_t version = 1;
  const std::int32_t g = field.grid_res;
  const std::int32_t n = field.window;
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&g), sizeof g);
  out.write(reinterpret_cast<const char*>(&field.sharpness), sizeof field.sharpness);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(field.h.data()), static_cast<std::streamsize>(field.h.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed for " + path);
}

ZMonoField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::int32_t g = 0, n = 0;
  double k = 0.0;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "ZMSDFCK1", 8) != 0) throw std::runtime_error(path + ": not a field checkpoint");
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != 1) throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  in.read(reinterpret_cast<char*>(&g), sizeof g);
  in.read(reinterpret_cast<char*>(&k), sizeof k);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || g < 1 || g > 65536) throw std::runtime_error(path + ": corrupt checkpoint header");
  ZMonoField f;
  f.grid_res = g;
  f.sharpness = k;
  f.window = n;
  f.h.resize(static_cast<std::size_t>(g) * g);
  in.read(reinterpret_cast<char*>(f.h.data()), static_cast<std::streamsize>(f.h.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  f.validate();
  return f;
}

}  // namespace zmono
