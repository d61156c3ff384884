// png_scale <in.png> <out.png> <factor>
// Multiplies every channel by factor (clamped to [0, 1]). Serves as a known
// external enhancer in the texture tests.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

#include "zmono/image.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: png_scale <in.png> <out.png> <factor>\n";
    return 2;
  }
  try {
    zmono::RgbImage img = zmono::read_png(argv[1]);
    const float f = std::stof(argv[3]);
    for (float& v : img.data) v = std::clamp(v * f, 0.0f, 1.0f);
    zmono::write_png(img, argv[2]);
  } catch (const std::exception& e) {
    std::cerr << "png_scale: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
