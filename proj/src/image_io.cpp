#include "refgrasp/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

namespace refgrasp {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) {
  throw ImageIoError(message ? message : "libpng error");
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

GrayImage read_gray_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ImageIoError("cannot open image: " + path.string());

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0)
    throw ImageIoError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (!png) throw ImageIoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  if (!info) throw ImageIoError("png_create_info_struct failed");

  GrayImage image;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_GRAY_ALPHA)
      throw ImageIoError("expected a single-channel PNG: " + path.string());
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_swap(png);  // little-endian hosts
    png_read_update_info(png, info);

    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.bit_depth = bit_depth == 16 ? 16 : 8;
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(image.height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
    for (int y = 0; y < image.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    image.pixels.resize(static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height));
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      if (image.bit_depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, buffer.data() + 2 * i, 2);
        image.pixels[i] = v;
      } else {
        image.pixels[i] = buffer[i];
      }
    }
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
  return image;
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16) throw ImageIoError("bit depth must be 8 or 16");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height))
    throw ImageIoError("pixel buffer does not match image size");

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ImageIoError("cannot write image: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (!png) throw ImageIoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  if (!info) throw ImageIoError("png_create_info_struct failed");

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               image.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (image.bit_depth == 16) png_set_swap(png);

  const std::size_t bytes_per_sample = image.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * bytes_per_sample);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint16_t v = image.at(x, y);
      if (bytes_per_sample == 2) {
        std::memcpy(row.data() + 2 * static_cast<std::size_t>(x), &v, 2);
      } else {
        row[static_cast<std::size_t>(x)] = static_cast<png_byte>(v > 255 ? 255 : v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

Mask read_mask_png(const std::filesystem::path& path) {
  const GrayImage image = read_gray_png(path);
  Mask mask(image.height, image.width);
  auto out = mask.data();
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out[i] = image.pixels[i] != 0 ? 1 : 0;
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  GrayImage image{mask.height(), mask.width(), 8, {}};
  image.pixels.reserve(mask.data().size());
  for (std::uint8_t p : mask.data()) image.pixels.push_back(p ? 255 : 0);
  write_gray_png(path, image);
}

}  // namespace refgrasp
