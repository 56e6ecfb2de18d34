#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "appray/ui.hpp"

namespace appray::ui {

// 8-bit RGB image, row-major triples.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  Raster() = default;
  Raster(int w, int h, uint8_t r = 0, uint8_t g = 0, uint8_t b = 0);

  uint8_t* at(int x, int y) { return pixels.data() + 3 * (y * width + x); }
  const uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (y * width + x);
  }
  void fill_rect(const Rect& r, uint8_t cr, uint8_t cg, uint8_t cb);
  bool operator==(const Raster&) const = default;
};

// bounds clipped to the raster; fully-outside bounds give an empty crop.
Raster crop(const Raster& img, const Rect& r);

// PNG I/O. Any channel layout is accepted on read and reduced to 8-bit RGB
// (alpha discarded). Throws IoFailure / MalformedInput.
Raster decode_png(const std::string& path);
Raster decode_png_bytes(const std::vector<uint8_t>& bytes);
void encode_png(const Raster& img, const std::string& path);
std::vector<uint8_t> encode_png_bytes(const Raster& img);

}  // namespace appray::ui
