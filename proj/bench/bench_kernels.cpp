// Parallel kernels against their serial references. Run with
// OMP_NUM_THREADS set to compare scaling.
#include <benchmark/benchmark.h>

#include <random>

#include "reference/reference.hpp"
#include "zmono/camera.hpp"
#include "zmono/metrics.hpp"
#include "zmono/synth.hpp"

using namespace zmono;

namespace {

ZMonoField bumpy_field(int G) {
  ZMonoField f(G);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (double& h : f.h) h = u(rng);
  return f;
}

HeightMap ramp_map(int R) {
  HeightMap m(R, 0.0, true);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int v = 0; v < R; ++v)
    for (int u = 0; u < R; ++u) m.at(u, v) = 0.3 * m.cell_center(u) + n(rng);
  return m;
}

const TriMesh& city_mesh() {
  static const TriMesh m = gt_mesh(gen_city(CityParams{}, 5));
  return m;
}

PointCloud cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(rng), u(rng), u(rng)});
  return c;
}

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  RgbImage img(w, h);
  for (float& v : img.data) v = u(rng);
  return img;
}

void BM_height_grid(benchmark::State& st) {
  const ZMonoField f = bumpy_field(64);
  for (auto _ : st) benchmark::DoNotOptimize(height_grid(f, 256));
}
void BM_height_grid_ref(benchmark::State& st) {
  const ZMonoField f = bumpy_field(64);
  for (auto _ : st) benchmark::DoNotOptimize(ref::height_grid(f, 256));
}

void BM_sample_sdf(benchmark::State& st) {
  const ZMonoField f = bumpy_field(32);
  for (auto _ : st) benchmark::DoNotOptimize(sample_sdf(f, 64));
}
void BM_sample_sdf_ref(benchmark::State& st) {
  const ZMonoField f = bumpy_field(32);
  for (auto _ : st) benchmark::DoNotOptimize(ref::sample_sdf(f, 64));
}

template <LossTerm (*Loss)(const HeightMap&)>
void BM_loss(benchmark::State& st) {
  const HeightMap m = ramp_map(512);
  for (auto _ : st) benchmark::DoNotOptimize(Loss(m));
}

void BM_loss_height(benchmark::State& st) {
  const HeightMap a = ramp_map(512), b(512, 0.1, true);
  for (auto _ : st) benchmark::DoNotOptimize(loss_height(a, b));
}
void BM_loss_height_ref(benchmark::State& st) {
  const HeightMap a = ramp_map(512), b(512, 0.1, true);
  for (auto _ : st) benchmark::DoNotOptimize(ref::loss_height(a, b));
}

const PinholeCamera& oblique() {
  static const PinholeCamera c = oriented_camera({0, -900, 700}, 0.0, 40.0, 256, 192, 60.0);
  return c;
}

void BM_rasterize(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(rasterize(city_mesh(), oblique()));
}
void BM_rasterize_ref(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(ref::rasterize(city_mesh(), oblique()));
}

void BM_ortho_raster(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(ortho_height_raster(city_mesh(), 256));
}
void BM_ortho_raster_ref(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(ref::ortho_height_raster(city_mesh(), 256));
}

void BM_nearest(benchmark::State& st) {
  const PointCloud a = cloud(4000, 1), b = cloud(4000, 2);
  for (auto _ : st) benchmark::DoNotOptimize(nearest_distances(a, b));
}
void BM_nearest_ref(benchmark::State& st) {
  const PointCloud a = cloud(4000, 1), b = cloud(4000, 2);
  for (auto _ : st) benchmark::DoNotOptimize(ref::nearest_distances(a, b));
}

void BM_ssim(benchmark::State& st) {
  const RgbImage a = noise_image(256, 256, 1), b = noise_image(256, 256, 2);
  for (auto _ : st) benchmark::DoNotOptimize(ssim(a, b));
}
void BM_ssim_ref(benchmark::State& st) {
  const RgbImage a = noise_image(256, 256, 1), b = noise_image(256, 256, 2);
  for (auto _ : st) benchmark::DoNotOptimize(ref::ssim(a, b));
}

}  // namespace

BENCHMARK(BM_height_grid)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_height_grid_ref)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_sdf)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_sdf_ref)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss_height)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss_height_ref)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss<loss_laplacian>)->Name("BM_loss_laplacian")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss<ref::loss_laplacian>)->Name("BM_loss_laplacian_ref")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss<loss_normal_tv>)->Name("BM_loss_normal_tv")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_loss<ref::loss_normal_tv>)->Name("BM_loss_normal_tv_ref")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rasterize)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rasterize_ref)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ortho_raster)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ortho_raster_ref)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_nearest)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_nearest_ref)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ssim)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ssim_ref)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
