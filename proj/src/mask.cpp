#include "refgrasp/mask.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace refgrasp {

namespace {

void require_same_shape(const Mask& a, const Mask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("mask dimension mismatch: " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()));
  }
}

// Separable running min/max over a (2r+1) window along rows then columns.
Mask morph(const Mask& mask, int radius, bool grow) {
  if (radius < 0) throw std::invalid_argument("morphology radius must be >= 0");
  if (radius == 0) return mask;
  const int h = mask.height();
  const int w = mask.width();
  Mask tmp(h, w);
  Mask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = !grow;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int xx = x + dx;
        const bool p = mask.in_bounds(xx, y) && mask.at(xx, y);
        if (grow ? p : !p) {
          v = grow;
          break;
        }
      }
      tmp.set(x, y, v);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = !grow;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        const bool p = tmp.in_bounds(x, yy) && tmp.at(x, yy);
        if (grow ? p : !p) {
          v = grow;
          break;
        }
      }
      out.set(x, y, v);
    }
  }
  return out;
}

}  // namespace

Mask::Mask(int height, int width) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw std::invalid_argument("mask dimensions must be non-negative");
  pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0);
}

std::size_t Mask::area() const {
  return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

std::optional<BBox> Mask::bbox() const {
  int min_x = width_, min_y = height_, max_x = -1, max_y = -1;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  if (max_x < 0) return std::nullopt;
  return BBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

std::optional<Point2d> Mask::centroid() const {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      sx += x;
      sy += y;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return Point2d{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

Rle encode_rle(const Mask& mask) {
  Rle rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t p : mask.data()) {
    if (p != current) {
      rle.counts.push_back(run);
      current = p;
      run = 0;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

Mask decode_rle(const Rle& rle) {
  Mask mask(rle.height, rle.width);
  auto pixels = mask.data();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : rle.counts) {
    if (pos + run > pixels.size()) throw std::invalid_argument("RLE counts exceed mask size");
    std::fill_n(pixels.begin() + static_cast<std::ptrdiff_t>(pos), run, value);
    pos += run;
    value ^= 1;
  }
  if (pos != pixels.size()) throw std::invalid_argument("RLE counts do not cover the mask");
  return mask;
}

std::size_t intersection_area(const Mask& a, const Mask& b) {
  require_same_shape(a, b);
  std::size_t n = 0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) n += (da[i] & db[i]);
  return n;
}

std::size_t union_area(const Mask& a, const Mask& b) {
  require_same_shape(a, b);
  std::size_t n = 0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) n += (da[i] | db[i]);
  return n;
}

Mask erode(const Mask& mask, int radius) { return morph(mask, radius, false); }
Mask dilate(const Mask& mask, int radius) { return morph(mask, radius, true); }

Mask rectangle_mask(int height, int width, const BBox& box) {
  Mask m(height, width);
  for (int y = std::max(0, box.y); y < std::min(height, box.y + box.h); ++y)
    for (int x = std::max(0, box.x); x < std::min(width, box.x + box.w); ++x) m.set(x, y);
  return m;
}

Mask ellipse_mask(int height, int width, const BBox& box) {
  Mask m(height, width);
  const double cx = box.x + (box.w - 1) / 2.0;
  const double cy = box.y + (box.h - 1) / 2.0;
  const double rx = box.w / 2.0;
  const double ry = box.h / 2.0;
  for (int y = std::max(0, box.y); y < std::min(height, box.y + box.h); ++y) {
    for (int x = std::max(0, box.x); x < std::min(width, box.x + box.w); ++x) {
      const double u = (x - cx) / rx;
      const double v = (y - cy) / ry;
      if (u * u + v * v <= 1.0) m.set(x, y);
    }
  }
  return m;
}

}  // namespace refgrasp
