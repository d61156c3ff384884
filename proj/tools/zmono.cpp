#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace zmono;
using namespace zmono::cli;

int main(int argc, char** argv) {
  RunConfig cfg;
  std::string manifest;
  CLI::App app{"zmono: 2.5D city reconstruction from sparse MVS points"};
  app.set_config("--config", "", "key = value config file; [fit], [extract], ... sections per command");
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--threads", cfg.threads, "OpenMP threads (0: default)")->capture_default_str();
  app.add_flag("--deterministic", cfg.deterministic, "omit wall-clock values from data files");
  app.add_option("--manifest", manifest, "manifest path (default: next to the outputs)");
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  auto* sim = app.add_subcommand("simulate", "generate a synthetic box city with views and point clouds");
  auto& so = cfg.simulate;
  double extent = 1000.0;
  std::string layout = "line";
  sim->add_option("--out", so.out_dir, "output directory")->capture_default_str();
  sim->add_option("--boxes", so.city.count)->capture_default_str();
  sim->add_option("--extent", extent, "scene side length, m")->capture_default_str();
  sim->add_option("--min-size", so.city.min_size)->capture_default_str();
  sim->add_option("--max-size", so.city.max_size)->capture_default_str();
  sim->add_option("--min-height", so.city.min_height)->capture_default_str();
  sim->add_option("--max-height", so.city.max_height)->capture_default_str();
  sim->add_option("--gap", so.city.gap)->capture_default_str();
  sim->add_option("--roof-density", so.profile.roof_density)->capture_default_str();
  sim->add_option("--ground-density", so.profile.ground_density)->capture_default_str();
  sim->add_option("--facade-density", so.profile.facade_density)->capture_default_str();
  sim->add_option("--noise", so.profile.noise_sigma, "z noise sigma, m")->capture_default_str();
  sim->add_option("--dropout", so.profile.dropout)->capture_default_str();
  sim->add_option("--outliers", so.profile.outlier_fraction)->capture_default_str();
  sim->add_option("--view-scale", so.view_scale, "render resolution factor")->capture_default_str();
  sim->add_option("--gt-samples", so.gt_samples)->capture_default_str();
  sim->add_option("--altitude", so.train.altitude)->capture_default_str();
  sim->add_option("--gsd", so.train.gsd)->capture_default_str();
  sim->add_option("--overlap", so.train.overlap)->capture_default_str();
  sim->add_option("--test-layout", layout)->check(CLI::IsMember({"line", "grid"}))->capture_default_str();
  bool no_render = false;
  sim->add_flag("--no-render", no_render, "skip rendering views");

  auto* fit = app.add_subcommand("fit", "fit tiled Z-monotonic fields to a point cloud");
  auto& fo = cfg.fit;
  fit->add_option("--input", fo.input, "PLY point cloud (world units)")->required();
  fit->add_option("--out", fo.out_dir, "output directory")->capture_default_str();
  fit->add_option("--lr", fo.fit.lr)->capture_default_str();
  fit->add_option("--steps", fo.fit.steps)->capture_default_str();
  fit->add_option("--lambda-lap", fo.fit.lambda_lap)->capture_default_str();
  fit->add_option("--lambda-nrm", fo.fit.lambda_nrm)->capture_default_str();
  fit->add_option("--target-res", fo.fit.R, "supervision grid R")->capture_default_str();
  fit->add_option("--grid-res", fo.fit.G, "field grid G")->capture_default_str();
  fit->add_option("--sharpness", fo.fit.k)->capture_default_str();
  fit->add_option("--window", fo.fit.window)->capture_default_str();
  fit->add_option("--tiles", fo.fit.tiles, "tiles per side")->capture_default_str();
  fit->add_option("--tile-overlap", fo.fit.overlap)->capture_default_str();
  fit->add_option("--padding", fo.fit.padding)->capture_default_str();

  auto* ext = app.add_subcommand("extract", "extract a mesh from fitted tiles");
  auto& eo = cfg.extract;
  ext->add_option("--fit-dir", eo.fit_dir)->capture_default_str();
  ext->add_option("--method", eo.method)->check(CLI::IsMember({"mc", "height", "naive128", "naive256"}))->capture_default_str();
  ext->add_option("--mc-res", eo.mc_res)->capture_default_str();
  ext->add_option("--height-res", eo.height_res, "cells per tile side (0: field grid)")->capture_default_str();
  ext->add_option("--out", eo.out, "OBJ path")->capture_default_str();

  auto* tex = app.add_subcommand("texture", "bake and refine a texture atlas");
  auto& to = cfg.texture;
  tex->add_option("--mesh", to.mesh, "OBJ mesh")->required();
  tex->add_option("--views", to.views_dir, "directory with cameras.txt and train_NNNN.png")->required();
  tex->add_option("--out", to.out_dir)->capture_default_str();
  tex->add_option("--atlas", to.atlas, "atlas side, texels")->capture_default_str();
  tex->add_option("--epochs", to.epochs)->capture_default_str();
  tex->add_option("--iterations", to.refine.iterations)->capture_default_str();
  tex->add_option("--refine-epochs", to.refine.epochs)->capture_default_str();
  tex->add_flag("--basic-only", to.basic_only, "skip refinement");
  tex->add_option("--hook", to.hook_command, "enhancer command with {in} and {out}; empty: identity");
  tex->add_option("--hook-timeout", to.hook_timeout)->capture_default_str();
  tex->add_option("--hook-parallel", to.hook_parallel)->capture_default_str();
  tex->add_option("--novel-res", to.refine.views.resolution)->capture_default_str();
  tex->add_option("--novel-stride", to.refine.views.stride)->capture_default_str();
  tex->add_option("--novel-margin", to.refine.views.margin)->capture_default_str();
  tex->add_option("--novel-altitude", to.refine.views.altitude)->capture_default_str();
  tex->add_option("--novel-pitch", to.refine.views.pitch_deg)->capture_default_str();
  tex->add_option("--novel-fov", to.refine.views.fov_deg)->capture_default_str();

  auto* ev = app.add_subcommand("eval", "geometry and image metrics");
  auto& vo = cfg.eval;
  ev->add_option("--pred", vo.pred, "predicted OBJ")->required();
  ev->add_option("--gt", vo.gt, "ground-truth OBJ or scene file")->required();
  ev->add_option("--out", vo.out)->capture_default_str();
  ev->add_option("--d-tau", vo.d_tau)->capture_default_str();
  ev->add_option("--samples", vo.samples)->capture_default_str();
  ev->add_option("--views", vo.textured_views, "directory with test_cameras.txt and test_NNNN.png");
  ev->add_option("--atlas", vo.atlas, "atlas PNG for --views");
  ev->add_option("--mask-border", vo.mask_border)->capture_default_str();

  auto* rerun = app.add_subcommand("rerun", "re-execute a manifest and compare output hashes");
  std::string rerun_path;
  rerun->add_option("manifest", rerun_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors are bad input
  }

  so.city.bounds = {-extent / 2, -extent / 2, extent / 2, extent / 2};
  so.test.layout = layout == "grid" ? TestLayout::Grid : TestLayout::Line;
  so.render_views = !no_render;

  if (rerun->parsed()) return rerun_manifest(rerun_path, cfg.threads, manifest);

  std::string command;
  fs::path default_manifest;
  if (sim->parsed()) {
    command = "simulate";
    default_manifest = fs::path(so.out_dir) / "manifest.json";
  } else if (fit->parsed()) {
    command = "fit";
    default_manifest = fs::path(fo.out_dir) / "manifest.json";
  } else if (ext->parsed()) {
    command = "extract";
    default_manifest = fs::path(eo.out).replace_extension(".manifest.json");
  } else if (tex->parsed()) {
    command = "texture";
    default_manifest = fs::path(to.out_dir) / "manifest.json";
  } else {
    command = "eval";
    default_manifest = fs::path(vo.out).replace_extension(".manifest.json");
  }
  return run_command(command, cfg, manifest.empty() ? default_manifest.string() : manifest);
}
