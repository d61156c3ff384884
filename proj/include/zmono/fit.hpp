#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zmono/field.hpp"
#include "zmono/geom.hpp"
#include "zmono/heightmap.hpp"

namespace zmono {

struct FitConfig {
  double lr = 0.01;
  int steps = 2000;
  double lambda_lap = 0.5;
  double lambda_nrm = 0.01;
  int R = 1024;          // supervision grid
  int G = 256;           // parameter grid
  double k = kDefaultSharpness;
  int window = 3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;  // the fit is deterministic; kept for the manifest
  double padding = 0.05;   // normalization padding (fraction)
  int tiles = 2;           // per side, fit_tiled only
  double overlap = 0.1;    // tile margin as a fraction of the core size

  void validate() const;
};

struct FitReport {
  std::vector<double> height, laplacian, normal, total;  // one entry per step
  double final_total = 0.0;
  double final_rmse = 0.0;  // over valid target cells, normalized z
  double wall_seconds = 0.0;
  int steps = 0;

  std::string to_json() const;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Max-z accumulation into an R x R grid over [-1, 1]^2; empty cells invalid.
HeightMap build_target_heightmap(const PointCloud& cloud, int R);

// Each G cell starts at the mean valid target height inside it, or at the
// lowest valid target height when it holds none.
ZMonoField initial_field(const HeightMap& target, const FitConfig& cfg);

struct FitResult {
  ZMonoField field;
  FitReport report;
};

using FitProgress = std::function<void(int step, double total)>;

// Adam on the field heights against the target built from `cloud`
// (normalized frame). Throws DivergenceError on a non-finite loss.
FitResult fit(const PointCloud& cloud, const FitConfig& cfg, const FitProgress& progress = {});
FitResult fit_target(const HeightMap& target, const FitConfig& cfg, const FitProgress& progress = {});

struct TileFit {
  int ix = 0, iy = 0;
  Rect core;    // world xy, tiles partition the scene box
  Rect region;  // core grown by the overlap margin, clipped to the scene
  NormalizeTransform transform;
  ZMonoField field;
  FitReport report;
  std::size_t point_count = 0;
  bool degenerate = false;  // < kMinTilePoints: flat ground field
};

inline constexpr std::size_t kMinTilePoints = 100;

// Core and region rectangles of the tiles x tiles split of the cloud's xy box.
std::vector<TileFit> plan_tiles(const PointCloud& world, int tiles, double overlap);
// Points of `world` falling into the tile's region (boundaries inclusive).
PointCloud tile_points(const PointCloud& world, const TileFit& tile);

std::vector<TileFit> fit_tiled(const PointCloud& world, const FitConfig& cfg,
                               const std::function<void(const std::string&)>& log = {});

}  // namespace zmono
