#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "refgrasp/mask.hpp"

namespace refgrasp {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-channel image with up to 16 bits per sample.
struct GrayImage {
  int height = 0;
  int width = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> pixels;

  std::uint16_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

// Grayscale PNG only (1/2/4/8/16-bit); samples are returned unscaled.
GrayImage read_gray_png(const std::filesystem::path& path);
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);

/// Any nonzero sample is foreground.
Mask read_mask_png(const std::filesystem::path& path);
/// 8-bit PNG with foreground 255.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

}  // namespace refgrasp
