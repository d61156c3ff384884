#include "pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <omp.h>

#include "zmono/io.hpp"
#include "zmono/mesh.hpp"
#include "zmono/raster.hpp"

namespace zmono {

// JSON mappings for the option structs (ADL needs them in this namespace).
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Rect, x0, y0, x1, y1)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CityParams, count, bounds, ground, min_size, max_size, min_height,
                                                max_height, gap, max_attempts)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MvsSamplingProfile, roof_density, ground_density, facade_density,
                                                noise_sigma, dropout, outlier_fraction)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainingGridConfig, altitude, width, height, gsd, overlap, fov_deg,
                                                stride, rotations)
NLOHMANN_JSON_SERIALIZE_ENUM(TestLayout, {{TestLayout::Line, "line"}, {TestLayout::Grid, "grid"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TestGridConfig, altitudes, width, height, fov_deg, depression_deg,
                                                interval, half_extent, headings, layout)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FitConfig, lr, steps, lambda_lap, lambda_nrm, R, G, k, window, beta1,
                                                beta2, eps, seed, padding, tiles, overlap)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NovelViewConfig, stride, margin, altitude, pitch_deg, headings,
                                                resolution, fov_deg)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RefineConfig, iterations, epochs, views, lambda_mse, lambda_ssim)

namespace cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulateOptions, out_dir, city, profile, train, test, view_scale,
                                                render_views, gt_samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FitOptions, input, out_dir, fit)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExtractOptions, fit_dir, method, mc_res, height_res, out)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TextureOptions, mesh, views_dir, out_dir, atlas, epochs, refine,
                                                basic_only, hook_command, hook_timeout, hook_parallel)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalOptions, pred, gt, out, d_tau, samples, textured_views, atlas,
                                                mask_border)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, seed, threads, deterministic, simulate, fit, extract,
                                                texture, eval)

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json to_json(const RunConfig& cfg) { return json(cfg); }
RunConfig config_from_json(const nlohmann::json& j) { return j.get<RunConfig>(); }

namespace {

void log(const std::string& msg) { std::cerr << "[zmono] " << msg << std::endl; }

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw InputError(what + " path is empty");
  if (!fs::is_regular_file(path)) throw InputError(what + " not found: " + path);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".zmono-write-test";
  std::ofstream f(probe);
  if (!f) throw InputError("output directory is not writable: " + dir.string());
  f.close();
  fs::remove(probe);
}

std::string numbered(const fs::path& dir, const char* prefix, std::size_t i) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%04zu.png", prefix, i);
  return (dir / name).string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  require_file(path, "json file");
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

json fit_report_json(FitReport r, bool deterministic) {
  if (deterministic) r.wall_seconds = 0.0;
  return json::parse(r.to_json());
}

json transform_json(const NormalizeTransform& t) {
  return {{"scale_xy", t.scale_xy}, {"scale_z", t.scale_z}, {"offset", {t.offset.x, t.offset.y, t.offset.z}}};
}

NormalizeTransform transform_from(const json& j) {
  NormalizeTransform t;
  t.scale_xy = j.at("scale_xy");
  t.scale_z = j.at("scale_z");
  t.offset = {j.at("offset")[0], j.at("offset")[1], j.at("offset")[2]};
  return t;
}

struct LoadedFit {
  std::vector<TileFit> tiles;
  std::string cloud;
  double padding = 0.05;
};

LoadedFit load_fit(const std::string& dir) {
  const json j = read_json((fs::path(dir) / "tiles.json").string());
  LoadedFit out;
  out.cloud = j.at("cloud");
  out.padding = j.at("padding");
  for (const auto& t : j.at("tiles")) {
    TileFit tf;
    tf.ix = t.at("ix");
    tf.iy = t.at("iy");
    tf.core = t.at("core").get<Rect>();
    tf.region = t.at("region").get<Rect>();
    tf.transform = transform_from(t.at("transform"));
    const std::string ck = (fs::path(dir) / t.at("checkpoint").get<std::string>()).string();
    require_file(ck, "field checkpoint");
    tf.field = read_field(ck);
    tf.point_count = t.at("point_count");
    tf.degenerate = t.at("degenerate");
    out.tiles.push_back(std::move(tf));
  }
  if (out.tiles.empty()) throw InputError(dir + ": no tiles");
  return out;
}

bool is_scene_file(const std::string& path) {
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  return first.rfind("zmono-scene", 0) == 0;
}

std::vector<RgbImage> read_views(const fs::path& dir, const char* prefix, std::size_t n) {
  std::vector<RgbImage> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = numbered(dir, prefix, i);
    require_file(p, "view image");
    out.push_back(read_png(p));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

StageResult cmd_simulate(const RunConfig& cfg) {
  const auto& o = cfg.simulate;
  const fs::path dir(o.out_dir), views = dir / "views";
  make_dir(views);
  StageResult res;
  const BoxCity city = gen_city(o.city, cfg.seed);
  write_scene(city, (dir / "scene.txt").string());
  const TriMesh gt = gt_mesh(city);
  write_obj(gt, (dir / "gt_mesh.obj").string());
  PointCloud gt_cloud = sample_mesh(gt, o.gt_samples, cfg.seed);
  write_ply(gt_cloud, (dir / "gt_points.ply").string());
  const PointCloud mvs = sample_mvs(city, o.profile, cfg.seed);
  write_ply(mvs, (dir / "mvs_points.ply").string());
  res.outputs = {(dir / "scene.txt").string(), (dir / "gt_mesh.obj").string(), (dir / "gt_points.ply").string(),
                 (dir / "mvs_points.ply").string()};

  auto scale_all = [&](std::vector<PinholeCamera> cams) {
    for (auto& c : cams) c = scaled(c, o.view_scale);
    return cams;
  };
  const CaptureGrid train = training_grid(city.bounds, city.ground, o.train);
  const CaptureGrid test = test_grid(city.bounds, city.ground, o.test);
  const auto train_cams = scale_all(train.cameras), test_cams = scale_all(test.cameras);
  write_cameras(train_cams, (views / "cameras.txt").string());
  write_cameras(test_cams, (views / "test_cameras.txt").string());
  res.outputs.push_back((views / "cameras.txt").string());
  res.outputs.push_back((views / "test_cameras.txt").string());
  if (o.render_views) {
    const auto train_img = render_gt_views(city, train_cams);
    for (std::size_t i = 0; i < train_img.size(); ++i) {
      write_png(train_img[i], numbered(views, "train", i));
      res.outputs.push_back(numbered(views, "train", i));
    }
    const auto test_img = render_gt_views(city, test_cams);
    for (std::size_t i = 0; i < test_img.size(); ++i) {
      write_png(test_img[i], numbered(views, "test", i));
      res.outputs.push_back(numbered(views, "test", i));
    }
  }
  log("simulated " + std::to_string(city.boxes.size()) + " boxes, " + std::to_string(mvs.size()) + " MVS points, " +
      std::to_string(train_cams.size()) + " training and " + std::to_string(test_cams.size()) + " test views");
  res.report = {{"boxes", city.boxes.size()},
                {"mvs_points", mvs.size()},
                {"gt_points", gt_cloud.size()},
                {"training_views", train_cams.size()},
                {"test_views", test_cams.size()},
                {"training_fov_deg", train.cameras.empty() ? 0.0 : train.cameras.front().fov_deg},
                {"training_stride", train.stride}};
  return res;
}

StageResult cmd_fit(const RunConfig& cfg) {
  const auto& o = cfg.fit;
  require_file(o.input, "input point cloud");
  const fs::path dir(o.out_dir);
  make_dir(dir);
  PointCloud cloud;
  try {
    cloud = read_ply(o.input);
  } catch (const PlyError& e) {
    throw InputError(o.input + ": " + e.what());
  }
  if (cloud.empty()) throw InputError(o.input + ": no points");
  FitConfig fc = o.fit;
  fc.seed = cfg.seed;
  fc.validate();
  const auto tiles = fit_tiled(cloud, fc, [](const std::string& m) { log(m); });

  StageResult res;
  res.inputs = {o.input};
  json jt = json::array(), reports = json::array();
  double rmse_sum = 0.0;
  for (const auto& t : tiles) {
    const std::string name = "tile_" + std::to_string(t.ix) + "_" + std::to_string(t.iy) + ".zmf";
    write_field(t.field, (dir / name).string());
    res.outputs.push_back((dir / name).string());
    jt.push_back({{"ix", t.ix},
                  {"iy", t.iy},
                  {"core", t.core},
                  {"region", t.region},
                  {"transform", transform_json(t.transform)},
                  {"checkpoint", name},
                  {"point_count", t.point_count},
                  {"degenerate", t.degenerate}});
    json r = fit_report_json(t.report, cfg.deterministic);
    r["tile"] = {t.ix, t.iy};
    reports.push_back(r);
    rmse_sum += t.report.final_rmse;
  }
  write_json({{"cloud", fs::absolute(o.input).string()}, {"padding", fc.padding}, {"tiles", jt}},
             (dir / "tiles.json").string());
  const json report{{"tiles", reports}, {"mean_final_rmse", rmse_sum / tiles.size()}};
  write_json(report, (dir / "fit_report.json").string());
  res.outputs.push_back((dir / "tiles.json").string());
  res.outputs.push_back((dir / "fit_report.json").string());
  res.report = {{"tiles", tiles.size()}, {"mean_final_rmse", rmse_sum / tiles.size()}};
  return res;
}

StageResult cmd_extract(const RunConfig& cfg) {
  const auto& o = cfg.extract;
  const LoadedFit fit = load_fit(o.fit_dir);
  StageResult res;
  res.inputs = {(fs::path(o.fit_dir) / "tiles.json").string()};
  for (const auto& t : fit.tiles) {
    res.inputs.push_back((fs::path(o.fit_dir) / ("tile_" + std::to_string(t.ix) + "_" + std::to_string(t.iy) + ".zmf")).string());
  }
  TriMesh mesh;
  json extra;
  if (o.method == "height") {
    const int cells = o.height_res > 0 ? o.height_res : fit.tiles.front().field.grid_res;
    auto merged = merge_tiles(fit.tiles, cells);
    mesh = std::move(merged.mesh);
    extra = json::parse(merged.report.to_json());
  } else if (o.method == "mc") {
    double zmin = 1e300, zmax = -1e300;
    for (const auto& t : fit.tiles) {
      zmin = std::min(zmin, t.transform.to_world({0, 0, -1}).z);
      zmax = std::max(zmax, t.transform.to_world({0, 0, 1}).z);
    }
    mesh = extract_tiled_mc(fit.tiles, o.mc_res, zmin, zmax);
  } else if (o.method == "naive128" || o.method == "naive256") {
    require_file(fit.cloud, "input point cloud");
    res.inputs.push_back(fit.cloud);
    const auto [norm, t] = normalize_cloud(read_ply(fit.cloud), fit.padding);
    mesh = denormalize(naive_mc_baseline(norm, o.method == "naive128" ? 128 : 256), t);
  } else {
    throw InputError("unknown extraction method '" + o.method + "' (mc | height | naive128 | naive256)");
  }
  const fs::path out(o.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  write_obj(mesh, out.string());
  const WatertightReport wt = watertight_check(mesh);
  const std::string wt_path = fs::path(out).replace_extension(".watertight.json").string();
  json report = json::parse(wt.to_json());
  const Bounds3 b = bounds_of(mesh.vertices);
  report["method"] = o.method;
  report["vertices"] = mesh.vertices.size();
  report["triangles"] = mesh.triangles.size();
  report["bbox_min"] = {b.min.x, b.min.y, b.min.z};
  report["bbox_max"] = {b.max.x, b.max.y, b.max.z};
  if (!extra.is_null()) report["merge"] = extra;
  write_json(report, wt_path);
  res.outputs = {out.string(), wt_path};
  res.report = report;
  log(o.method + " mesh: " + std::to_string(mesh.triangles.size()) + " triangles, boundary edges " +
      std::to_string(wt.boundary_edges));
  return res;
}

StageResult cmd_texture(const RunConfig& cfg) {
  const auto& o = cfg.texture;
  require_file(o.mesh, "mesh");
  const fs::path vdir(o.views_dir), dir(o.out_dir);
  require_file((vdir / "cameras.txt").string(), "camera file");
  make_dir(dir);
  StageResult res;
  res.inputs = {o.mesh, (vdir / "cameras.txt").string()};
  const TriMesh uv = assign_uvs(read_obj(o.mesh), {o.atlas, o.atlas, 2});
  const auto cams = read_cameras((vdir / "cameras.txt").string());
  const auto images = read_views(vdir, "train", cams.size());
  std::vector<View> views;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    views.push_back({images[i], cams[i]});
    res.inputs.push_back(numbered(vdir, "train", i));
  }
  const BakeResult basic = bake_basic(uv, views, o.atlas, o.atlas, {o.epochs, true});
  write_png(basic.atlas.image(), (dir / "atlas_basic.png").string());
  res.outputs.push_back((dir / "atlas_basic.png").string());
  log("basic bake: loss " + std::to_string(basic.loss.front()) + " -> " + std::to_string(basic.loss.back()));

  TextureAtlas final_atlas = basic.atlas;
  json refine_report = nullptr;
  if (!o.basic_only) {
    EnhancerHook hook;
    if (!o.hook_command.empty()) {
      hook.mode = EnhancerHook::Mode::ExternalCommand;
      hook.command = o.hook_command;
      hook.work_dir = (dir / "hook").string();
    }
    hook.timeout_s = o.hook_timeout;
    hook.max_parallel = o.hook_parallel;
    RefineResult r = refine(uv, basic.atlas, hook, o.refine);
    final_atlas = r.atlas;
    refine_report = {{"completed_iterations", r.completed_iterations}, {"loss", r.loss}};
    if (r.failure) {
      write_png(final_atlas.image(), (dir / "atlas.png").string());
      throw *r.failure;
    }
  }
  write_png(final_atlas.image(), (dir / "atlas.png").string());
  write_obj(uv, (dir / "textured.obj").string(), ObjMaterial{"atlas", "atlas.png"});
  res.outputs.push_back((dir / "atlas.png").string());
  res.outputs.push_back((dir / "textured.obj").string());
  res.outputs.push_back((dir / "textured.mtl").string());

  // Re-render the source views through the final atlas.
  double psnr_sum = 0.0, ssim_sum = 0.0;
  const RgbImage atlas_img = final_atlas.image();
  for (const auto& v : views) {
    const RgbImage r = render_with_atlas(uv, atlas_img, v.camera);
    const auto mask = border_mask(r.width, r.height, 8);
    const auto m = image_metrics(r, v.image, &mask);
    psnr_sum += m.psnr_table();
    ssim_sum += m.ssim;
  }
  res.report = {{"basic_loss", basic.loss},
                {"refine", refine_report},
                {"source_view_psnr", psnr_sum / views.size()},
                {"source_view_ssim", ssim_sum / views.size()},
                {"lambda_mse", o.refine.lambda_mse},
                {"lambda_ssim", o.refine.lambda_ssim},
                {"ssim_in_objective", false}};
  write_json(res.report, (dir / "texture_report.json").string());
  res.outputs.push_back((dir / "texture_report.json").string());
  return res;
}

GeoMetricReport evaluate_geometry(const TriMesh& pred_world, const TriMesh& gt_world, double d_tau,
                                  std::size_t samples, std::uint64_t seed) {
  const Bounds3 gb = bounds_of(gt_world.vertices);
  const double mx = 0.01 * (gb.max.x - gb.min.x), my = 0.01 * (gb.max.y - gb.min.y);
  auto crop = [&](const TriMesh& m) {
    TriMesh out;
    out.vertices = m.vertices;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const auto& tri = m.triangles[t];
      const Vec3 c = (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) * (1.0 / 3.0);
      if (!(c.x > gb.min.x + mx && c.x < gb.max.x - mx && c.y > gb.min.y + my && c.y < gb.max.y - my)) continue;
      const Vec3 n = m.normal(t);
      const double len = norm(n);
      if (len > 0.0 && n.z / len < -0.5) continue;
      out.triangles.push_back(tri);
    }
    if (out.triangles.empty()) throw InputError("no triangles left inside the evaluation box");
    return out;
  };
  PointCloud gv;
  gv.points = gt_world.vertices;
  const auto t = normalize_cloud(gv, 0.0).second;
  const PointCloud pc = sample_mesh(normalize(crop(pred_world), t), samples, seed);
  const PointCloud gc = sample_mesh(normalize(crop(gt_world), t), samples, seed);
  return prf(pc, gc, d_tau);
}

StageResult cmd_eval(const RunConfig& cfg) {
  const auto& o = cfg.eval;
  require_file(o.pred, "predicted mesh");
  require_file(o.gt, "ground truth");
  StageResult res;
  res.inputs = {o.pred, o.gt};
  const TriMesh pred = read_obj(o.pred);
  const TriMesh gt = is_scene_file(o.gt) ? gt_mesh(read_scene(o.gt)) : read_obj(o.gt);
  const GeoMetricReport g = evaluate_geometry(pred, gt, o.d_tau, o.samples, cfg.seed);
  json report{{"geometry", json::parse(g.to_json())}};
  report["geometry"]["crop"] = "centroid inside the ground-truth xy box shrunk by 1%, downward faces dropped";

  if (!o.textured_views.empty()) {
    const fs::path vdir(o.textured_views);
    require_file(o.atlas, "atlas");
    if (!pred.has_uvs()) throw InputError(o.pred + ": textured evaluation needs a mesh with uvs");
    const auto cams = read_cameras((vdir / "test_cameras.txt").string());
    const auto gt_img = read_views(vdir, "test", cams.size());
    const RgbImage atlas = read_png(o.atlas);
    res.inputs.push_back(o.atlas);
    double psnr_sum = 0.0, ssim_sum = 0.0;
    json per_view = json::array();
    for (std::size_t i = 0; i < cams.size(); ++i) {
      const RgbImage r = render_with_atlas(pred, atlas, cams[i]);
      const auto mask = border_mask(r.width, r.height, o.mask_border);
      const auto m = image_metrics(r, gt_img[i], &mask);
      psnr_sum += m.psnr_table();
      ssim_sum += m.ssim;
      per_view.push_back(json::parse(m.to_json()));
    }
    report["images"] = {{"views", cams.size()},
                        {"psnr", psnr_sum / cams.size()},
                        {"ssim", ssim_sum / cams.size()},
                        {"per_view", per_view}};
  }
  const fs::path out(o.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  write_json(report, out.string());
  res.outputs = {out.string()};
  res.report = report;
  log("F1 " + std::to_string(g.f1) + "  P " + std::to_string(g.precision) + "  R " + std::to_string(g.recall) +
      "  CD " + std::to_string(g.chamfer));
  return res;
}

// ---------------------------------------------------------------------------

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot hash " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

namespace {

StageResult dispatch(const std::string& command, const RunConfig& cfg) {
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "fit") return cmd_fit(cfg);
  if (command == "extract") return cmd_extract(cfg);
  if (command == "texture") return cmd_texture(cfg);
  if (command == "eval") return cmd_eval(cfg);
  throw InputError("unknown command '" + command + "'");
}

json hashes(const std::vector<std::string>& paths) {
  json j = json::object();
  for (const auto& p : paths) j[p] = sha256_file(p);
  return j;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, const std::string& manifest_path) {
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const StageResult r = dispatch(command, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest{{"tool_version", kToolVersion},
                  {"command", command},
                  {"config", to_json(cfg)},
                  {"inputs", hashes(r.inputs)},
                  {"outputs", hashes(r.outputs)},
                  {"timings", {{command, secs}}},
                  {"threads", cfg.threads > 0 ? cfg.threads : omp_get_max_threads()},
                  {"report", r.report}};
    if (!manifest_path.empty()) {
      const fs::path mp(manifest_path);
      if (mp.has_parent_path()) make_dir(mp.parent_path());
      write_json(manifest, manifest_path);
    }
    log(command + " finished in " + std::to_string(secs) + " s");
    return kOk;
  } catch (const HookError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kHookFailed;
  } catch (const DivergenceError& e) {
    std::cerr << "error: fit diverged: " << e.what() << std::endl;
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kBadInput;
  }
}

int rerun_manifest(const std::string& manifest_path, int threads_override, const std::string& manifest_out) {
  json m;
  RunConfig cfg;
  try {
    m = read_json(manifest_path);
    cfg = config_from_json(m.at("config"));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kBadInput;
  }
  for (const auto& [path, hash] : m.at("inputs").items()) {
    if (!fs::exists(path) || sha256_file(path) != hash.get<std::string>()) {
      std::cerr << "error: input changed since the manifest was written: " << path << std::endl;
      return kBadInput;
    }
  }
  if (threads_override > 0) cfg.threads = threads_override;
  const std::string out = manifest_out.empty() ? manifest_path + ".rerun.json" : manifest_out;
  const int code = run_command(m.at("command"), cfg, out);
  if (code != kOk) return code;
  const json again = read_json(out);
  int mismatches = 0;
  for (const auto& [path, hash] : m.at("outputs").items()) {
    const auto it = again.at("outputs").find(path);
    if (it == again.at("outputs").end() || *it != hash) {
      std::cerr << "mismatch: " << path << std::endl;
      ++mismatches;
    }
  }
  std::cerr << (mismatches == 0 ? "rerun reproduced all " : "rerun differs in ") << (mismatches == 0 ? m.at("outputs").size() : static_cast<std::size_t>(mismatches))
            << " outputs" << std::endl;
  return mismatches == 0 ? kOk : 1;
}

}  // namespace cli
}  // namespace zmono
