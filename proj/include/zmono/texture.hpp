#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zmono/camera.hpp"
#include "zmono/enhancer.hpp"
#include "zmono/geom.hpp"
#include "zmono/image.hpp"

namespace zmono {

// Texel (x, y) sits at uv ((x + 0.5) / width, (y + 0.5) / height), v down.
struct TextureAtlas {
  static constexpr std::array<float, 3> kSentinel{1.0f, 0.0f, 1.0f};

  int width = 0;
  int height = 0;
  std::vector<float> rgb;       // 3 per texel
  std::vector<float> coverage;  // accumulated bilinear weight

  TextureAtlas() = default;
  TextureAtlas(int w, int h);  // all sentinel, zero coverage
  static TextureAtlas from_image(const RgbImage& img);

  std::size_t texel_count() const { return static_cast<std::size_t>(width) * height; }
  bool covered(std::size_t t) const { return coverage[t] > 0.0f; }
  RgbImage image() const;
};

struct UvOptions {
  int width = 2048;
  int height = 2048;
  int gutter = 2;  // texels around every chart
};

// Upward triangles (n_z >= 0.5) share one chart: the xy projection scaled
// into the upper half. Steep triangles get one chart each, shelf-packed into
// the lower half at the same texel density. The density is the largest that
// fits both halves. Downward triangles collapse onto texel (0, 0). Vertices
// are split per chart. Throws std::runtime_error when the steep charts
// overflow the lower half even at one texel each.
TriMesh assign_uvs(const TriMesh& mesh, const UvOptions& opt = {});

struct View {
  RgbImage image;
  PinholeCamera camera;
};

struct BakeOptions {
  int epochs = 100;
  bool interior_only = true;  // skip pixels on silhouettes
};

struct BakeResult {
  TextureAtlas atlas;
  std::vector<double> loss;  // mean squared error before the first and after every epoch
};

// Least squares on the bilinear pixel-to-texel system, solved by diagonal
// majorization: each epoch moves every texel by -gradient / coverage and
// clamps to [0, 1]. The loss never increases.
BakeResult bake_basic(const TriMesh& mesh, std::span<const View> views, int atlas_width, int atlas_height,
                      const BakeOptions& opt = {});

// Continues the same descent from `start`; texels no view touches keep their
// bits.
BakeResult bake_from(const TriMesh& mesh, std::span<const View> views, const TextureAtlas& start,
                     const BakeOptions& opt);

struct NovelViewConfig {
  double stride = 150.0;
  double margin = 100.0;
  double altitude = 450.0;
  double pitch_deg = 45.0;
  std::vector<double> headings{0.0, 90.0, 180.0, 270.0};
  int resolution = 2048;
  double fov_deg = 45.0;
};

// Look-at sites on a centered stride grid over the bbox grown by `margin`,
// max(1, ceil(extent / stride)) per axis at ground level (bbox min z); one
// camera per heading aimed at every site from `altitude` above it.
std::vector<PinholeCamera> novel_view_grid(const Bounds3& bbox, const NovelViewConfig& cfg);

struct RefineConfig {
  int iterations = 2;
  int epochs = 20;
  NovelViewConfig views;
  double lambda_mse = 0.8;
  double lambda_ssim = 0.2;  // carried for reporting; the objective is MSE only
  void validate() const;
};

struct RefineResult {
  TextureAtlas atlas;  // last good state
  int completed_iterations = 0;
  std::vector<std::vector<double>> loss;
  std::optional<HookError> failure;
};

// Per iteration: render the novel views from the current atlas, pass them
// through the hook and bake against the enhanced targets.
RefineResult refine(const TriMesh& mesh, const TextureAtlas& basic, const EnhancerHook& hook,
                    const RefineConfig& cfg);

}  // namespace zmono
