#pragma once

// Stage commands behind the zmono executable. Each stage reads and writes
// files only, so it can run (and be tested) on its own.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "zmono/camera.hpp"
#include "zmono/fit.hpp"
#include "zmono/metrics.hpp"
#include "zmono/synth.hpp"
#include "zmono/texture.hpp"

namespace zmono::cli {

inline constexpr const char* kToolVersion = "zmono 0.1.0";

enum ExitCode : int { kOk = 0, kBadInput = 2, kDiverged = 3, kHookFailed = 4 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulateOptions {
  std::string out_dir = "sim";
  CityParams city;
  MvsSamplingProfile profile{1.0, 1.0, 0.0, 0.2, 0.0, 0.0};
  TrainingGridConfig train;
  TestGridConfig test;
  double view_scale = 0.25;  // rendered views use cameras scaled by this factor
  bool render_views = true;
  std::size_t gt_samples = 200000;
};

struct FitOptions {
  std::string input;  // PLY, world units
  std::string out_dir = "fit";
  FitConfig fit;
};

struct ExtractOptions {
  std::string fit_dir = "fit";
  std::string method = "height";  // mc | height | naive128 | naive256
  int mc_res = 128;
  int height_res = 0;  // cells per tile side; 0 uses the field grid size
  std::string out = "mesh.obj";
};

struct TextureOptions {
  std::string mesh;
  std::string views_dir;  // holds cameras.txt and train_NNNN.png
  std::string out_dir = "texture";
  int atlas = 2048;
  int epochs = 100;
  RefineConfig refine;
  bool basic_only = false;
  std::string hook_command;  // empty: identity
  double hook_timeout = 300.0;
  int hook_parallel = 1;
};

struct EvalOptions {
  std::string pred;     // OBJ
  std::string gt;       // OBJ or scene file (zmono-scene)
  std::string out = "eval.json";
  double d_tau = kDefaultDTau;
  std::size_t samples = 100000;
  std::string textured_views;  // optional: directory with test_cameras.txt and test_NNNN.png
  std::string atlas;           // required with textured_views
  int mask_border = 8;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default
  bool deterministic = false;
  SimulateOptions simulate;
  FitOptions fit;
  ExtractOptions extract;
  TextureOptions texture;
  EvalOptions eval;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

struct StageResult {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json report;
};

StageResult cmd_simulate(const RunConfig& cfg);
StageResult cmd_fit(const RunConfig& cfg);
StageResult cmd_extract(const RunConfig& cfg);
StageResult cmd_texture(const RunConfig& cfg);
StageResult cmd_eval(const RunConfig& cfg);

// Runs `command`, times it and writes <manifest_path> holding the resolved
// config, input and output SHA-256 hashes, timing and tool version.
// Returns an exit code; errors are reported on stderr.
int run_command(const std::string& command, const RunConfig& cfg, const std::string& manifest_path);

// Re-executes a manifest's command with its recorded config (threads and
// output directory may be overridden) and compares output hashes.
int rerun_manifest(const std::string& manifest_path, int threads_override, const std::string& manifest_out);

std::string sha256_file(const std::string& path);

// Geometry evaluation frame: both meshes are mapped by normalize_cloud of the
// ground-truth vertices (no padding), triangles whose centroid is not
// strictly inside the ground-truth xy box or that face downward are cropped,
// then each side is sampled.
GeoMetricReport evaluate_geometry(const TriMesh& pred_world, const TriMesh& gt_world, double d_tau,
                                  std::size_t samples, std::uint64_t seed);

}  // namespace zmono::cli
