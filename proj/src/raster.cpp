#include "appray/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "appray/common.hpp"

namespace appray::ui {

Raster::Raster(int w, int h, uint8_t r, uint8_t g, uint8_t b)
    : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3) {
  for (size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
}

void Raster::fill_rect(const Rect& r, uint8_t cr, uint8_t cg, uint8_t cb) {
  const int x1 = std::clamp(r.x1, 0, width), x2 = std::clamp(r.x2, 0, width);
  const int y1 = std::clamp(r.y1, 0, height), y2 = std::clamp(r.y2, 0, height);
  for (int y = y1; y < y2; ++y) {
    uint8_t* p = at(x1, y);
    for (int x = x1; x < x2; ++x) {
      *p++ = cr;
      *p++ = cg;
      *p++ = cb;
    }
  }
}

Raster crop(const Raster& img, const Rect& r) {
  const int x1 = std::clamp(r.x1, 0, img.width);
  const int x2 = std::clamp(r.x2, 0, img.width);
  const int y1 = std::clamp(r.y1, 0, img.height);
  const int y2 = std::clamp(r.y2, 0, img.height);
  Raster out;
  out.width = std::max(0, x2 - x1);
  out.height = std::max(0, y2 - y1);
  out.pixels.resize(static_cast<size_t>(out.width) * out.height * 3);
  for (int y = 0; y < out.height; ++y)
    std::memcpy(out.pixels.data() + static_cast<size_t>(y) * out.width * 3,
                img.at(x1, y1 + y), static_cast<size_t>(out.width) * 3);
  return out;
}

namespace {

struct MemReader {
  const uint8_t* data;
  size_t size;
  size_t pos;
};

void mem_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->size) png_error(png, "read past end of PNG buffer");
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

void mem_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* v = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  v->insert(v->end(), data, data + n);
}

void mem_flush_fn(png_structp) {}

Raster decode_common(png_structp png, png_infop info) {
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_expand(png);          // palette/gray/low-bit -> full depth
  png_set_strip_alpha(png);     // alpha discarded
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  Raster img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] =
        img.pixels.data() + static_cast<size_t>(y) * img.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return img;
}

}  // namespace

Raster decode_png_bytes(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw AppError(ErrorKind::MalformedInput, "not a PNG stream");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  MemReader reader{bytes.data(), bytes.size(), 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw AppError(ErrorKind::MalformedInput, "corrupt PNG stream");
  }
  png_set_read_fn(png, &reader, mem_read_fn);
  Raster img = decode_common(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Raster decode_png(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw AppError(ErrorKind::IoFailure, "cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw AppError(ErrorKind::MalformedInput, "corrupt PNG file " + path);
  }
  png_init_io(png, f);
  Raster img = decode_common(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(f);
  return img;
}

std::vector<uint8_t> encode_png_bytes(const Raster& img) {
  std::vector<uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw AppError(ErrorKind::Internal, "PNG encode failed");
  }
  png_set_write_fn(png, &out, mem_write_fn, mem_flush_fn);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  // pinned settings so identical rasters encode to identical bytes
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = const_cast<png_bytep>(
        img.pixels.data() + static_cast<size_t>(y) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void encode_png(const Raster& img, const std::string& path) {
  std::vector<uint8_t> bytes = encode_png_bytes(img);
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw AppError(ErrorKind::IoFailure, "cannot write " + path);
  const size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size())
    throw AppError(ErrorKind::IoFailure, "short write to " + path);
}

}  // namespace appray::ui
