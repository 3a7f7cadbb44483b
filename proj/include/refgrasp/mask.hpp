#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace refgrasp {

struct Point2d {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2d&, const Point2d&) = default;
};

/// Axis-aligned box in pixels: columns [x, x+w), rows [y, y+h).
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Binary H x W bitmap stored row-major, one byte per pixel (0 or 1).
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool at(int x, int y) const { return pixels_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { pixels_[index(x, y)] = value ? 1 : 0; }

  std::size_t area() const;
  bool none() const { return area() == 0; }
  std::optional<BBox> bbox() const;
  std::optional<Point2d> centroid() const;

  std::span<const std::uint8_t> data() const { return pixels_; }
  std::span<std::uint8_t> data() { return pixels_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Row-major run lengths, alternating background/foreground, starting with a
/// (possibly zero) background run.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle encode_rle(const Mask& mask);
Mask decode_rle(const Rle& rle);

std::size_t intersection_area(const Mask& a, const Mask& b);
std::size_t union_area(const Mask& a, const Mask& b);

// Square (Chebyshev) structuring element of side 2*radius+1. Pixels outside
// the image count as background for erosion.
Mask erode(const Mask& mask, int radius);
Mask dilate(const Mask& mask, int radius);

Mask rectangle_mask(int height, int width, const BBox& box);
Mask ellipse_mask(int height, int width, const BBox& box);

}  // namespace refgrasp
