#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace zmono {

// Row-major RGB image with float channels in [0, 1]. Row 0 is the top row.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h, std::array<float, 3> fill = {0.f, 0.f, 0.f});

  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  float* at(int x, int y) { return data.data() + index(x, y); }
  const float* at(int x, int y) const { return data.data() + index(x, y); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Single-channel float image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// 8-bit sRGB-agnostic PNG I/O: values are quantized as round(v * 255).
void write_png(const RgbImage& img, const std::string& path);
RgbImage read_png(const std::string& path);

// 16-bit grayscale PNG, value mapped linearly from [lo, hi].
void write_png16(const GrayImage& img, const std::string& path, float lo, float hi);

// Raw little-endian float32 sidecar: "ZMFLT1\0\0" magic, int32 w, h, channels, data.
void write_float_sidecar(const std::vector<float>& data, int width, int height, int channels,
                         const std::string& path);

}  // namespace zmono
