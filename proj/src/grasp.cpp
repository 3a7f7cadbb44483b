#include "refgrasp/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace refgrasp {

namespace {

double cross(Point2d o, Point2d a, Point2d b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

Point2d lerp(Point2d a, Point2d b, double t) { return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}; }

std::uint16_t to_u16(double unit) {
  const double v = std::clamp(unit, 0.0, 1.0) * 65535.0;
  return static_cast<std::uint16_t>(std::lround(v));
}

}  // namespace

double normalize_grasp_angle(double angle) {
  double a = angle - kPi * std::floor((angle + kPi / 2.0) / kPi);
  // floor() can land exactly on the excluded upper end through rounding.
  if (a >= kPi / 2.0) a -= kPi;
  if (a < -kPi / 2.0) a += kPi;
  return a;
}

GraspRectangle::GraspRectangle(Point2d center, double angle, double width, double height)
    : center_(center), angle_(0.0), width_(width), height_(height) {
  if (!std::isfinite(center.x) || !std::isfinite(center.y) || !std::isfinite(angle) || !std::isfinite(width) ||
      !std::isfinite(height))
    throw std::invalid_argument("grasp parameters must be finite");
  if (width <= 0.0 || height <= 0.0) throw std::invalid_argument("grasp width and height must be positive");
  angle_ = normalize_grasp_angle(angle);
}

Quad rect_corners(const GraspRectangle& rect) {
  const double c = std::cos(rect.angle());
  const double s = std::sin(rect.angle());
  const Point2d u{c * rect.width() / 2.0, s * rect.width() / 2.0};    // along the axis
  const Point2d v{-s * rect.height() / 2.0, c * rect.height() / 2.0}; // across it
  const Point2d o = rect.center();
  return {{{o.x - u.x - v.x, o.y - u.y - v.y},
           {o.x + u.x - v.x, o.y + u.y - v.y},
           {o.x + u.x + v.x, o.y + u.y + v.y},
           {o.x - u.x + v.x, o.y - u.y + v.y}}};
}

GraspRectangle rect_from_corners(const Quad& p) {
  const Point2d center{(p[0].x + p[1].x + p[2].x + p[3].x) / 4.0, (p[0].y + p[1].y + p[2].y + p[3].y) / 4.0};
  const double width = std::hypot(p[1].x - p[0].x, p[1].y - p[0].y);
  const double height = std::hypot(p[2].x - p[1].x, p[2].y - p[1].y);
  const double angle = std::atan2(p[1].y - p[0].y, p[1].x - p[0].x);
  return GraspRectangle(center, angle, width, height);
}

double polygon_area(std::span<const Point2d> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) twice += polygon[j].x * polygon[i].y - polygon[i].x * polygon[j].y;
  return twice / 2.0;
}

std::vector<Point2d> clip_convex(std::span<const Point2d> subject, std::span<const Point2d> clip) {
  std::vector<Point2d> output(subject.begin(), subject.end());
  const std::size_t m = clip.size();
  for (std::size_t e2 = 0, e1 = m - 1; e2 < m && !output.empty(); e1 = e2++) {
    const std::vector<Point2d> input = std::move(output);
    output.clear();
    const std::size_t n = input.size();
    for (std::size_t v2 = 0, v1 = n - 1; v2 < n; v1 = v2++) {
      const double d1 = cross(clip[e1], clip[e2], input[v1]);
      const double d2 = cross(clip[e1], clip[e2], input[v2]);
      const bool in1 = d1 >= 0.0;
      const bool in2 = d2 >= 0.0;
      if (in1 && in2) {
        output.push_back(input[v2]);
      } else if (in1 && !in2) {
        output.push_back(lerp(input[v1], input[v2], d1 / (d1 - d2)));
      } else if (!in1 && in2) {
        output.push_back(lerp(input[v1], input[v2], d1 / (d1 - d2)));
        output.push_back(input[v2]);
      }
    }
  }
  return output;
}

double rect_intersection_area(const GraspRectangle& a, const GraspRectangle& b) {
  const Quad qa = rect_corners(a);
  const Quad qb = rect_corners(b);
  const auto clipped = clip_convex(qa, qb);
  return std::max(0.0, polygon_area(clipped));
}

double rect_iou(const GraspRectangle& a, const GraspRectangle& b) {
  const double inter = rect_intersection_area(a, b);
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double angle_difference_deg(double a, double b) {
  double d = std::fmod(std::fabs(a - b), kPi);
  d = std::min(d, kPi - d);
  return std::max(0.0, d) * 180.0 / kPi;
}

GraspMaps::GraspMaps(int h, int w) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("grasp maps need a positive size");
  const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  quality.assign(n, 0.0);
  angle.assign(n, 0.0);
  width_map.assign(n, 0.0);
}

void GraspMaps::validate() const {
  const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  if (height <= 0 || width <= 0) throw std::invalid_argument("grasp maps need a positive size");
  if (quality.size() != n || angle.size() != n || width_map.size() != n)
    throw std::invalid_argument("grasp maps must share one H x W size");
  if (mask && (mask->height() != height || mask->width() != width))
    throw std::invalid_argument("grasp map mask has a different size");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(quality[i] >= 0.0 && quality[i] <= 1.0)) throw std::invalid_argument("Q outside [0, 1]");
    if (!(width_map[i] >= 0.0 && width_map[i] <= 1.0)) throw std::invalid_argument("L outside [0, 1]");
    if (!(angle[i] >= -kPi / 2.0 - 1e-9 && angle[i] <= kPi / 2.0 + 1e-9))
      throw std::invalid_argument("Theta outside [-pi/2, pi/2]");
  }
}

bool point_in_image(Point2d p, int height, int width) {
  const double px = std::floor(p.x + 0.5);
  const double py = std::floor(p.y + 0.5);
  return px >= 0 && py >= 0 && px < width && py < height;
}

PixelCoord nearest_pixel(Point2d p, int height, int width) {
  const int x = static_cast<int>(std::floor(p.x + 0.5));
  const int y = static_cast<int>(std::floor(p.y + 0.5));
  return {std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1)};
}

std::vector<PixelCoord> grasp_paint_region(const GraspRectangle& rect, int height, int width) {
  const double c = std::cos(rect.angle());
  const double s = std::sin(rect.angle());
  const double half_w = rect.width() / 2.0;
  const double half_h = rect.height() / 6.0;
  const Point2d o = rect.center();
  const double reach_x = std::fabs(c) * half_w + std::fabs(s) * half_h;
  const double reach_y = std::fabs(s) * half_w + std::fabs(c) * half_h;

  std::vector<PixelCoord> pixels;
  const int x0 = std::max(0, static_cast<int>(std::floor(o.x - reach_x)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(o.x + reach_x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(o.y - reach_y)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(o.y + reach_y)));
  const PixelCoord center = nearest_pixel(o, height, width);
  bool center_seen = false;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - o.x;
      const double dy = y - o.y;
      const double along = dx * c + dy * s;
      const double across = -dx * s + dy * c;
      if (std::fabs(along) <= half_w && std::fabs(across) <= half_h) {
        pixels.push_back({x, y});
        if (x == center.x && y == center.y) center_seen = true;
      }
    }
  }
  if (!center_seen) {
    pixels.push_back(center);
    std::sort(pixels.begin(), pixels.end(),
              [](const PixelCoord& a, const PixelCoord& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  }
  return pixels;
}

GraspMaps render_grasp_maps(std::span<const GraspRectangle> grasps, int height, int width, double max_width) {
  if (grasps.empty()) throw std::invalid_argument("render_grasp_maps needs at least one grasp");
  if (!(max_width > 0.0)) throw std::invalid_argument("max_width must be positive");
  GraspMaps maps(height, width);
  for (const auto& g : grasps) {
    const Point2d c = g.center();
    if (!point_in_image(c, height, width))
      throw std::invalid_argument("grasp center (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                                  ") lies outside the " + std::to_string(height) + "x" + std::to_string(width) +
                                  " image");
    if (g.width() >= max_width)
      throw std::invalid_argument("grasp width " + std::to_string(g.width()) + " is not below max_width " +
                                  std::to_string(max_width));
  }
  for (const auto& g : grasps) {
    const double l = g.width() / max_width;
    for (const PixelCoord p : grasp_paint_region(g, height, width)) {
      const std::size_t i = maps.index(p.x, p.y);
      maps.quality[i] = 1.0;
      maps.angle[i] = g.angle();
      maps.width_map[i] = l;
    }
  }
  return maps;
}

std::vector<Peak> find_peaks(const GraspMaps& maps, std::size_t n, const PeakConfig& config) {
  const int h = maps.height;
  const int w = maps.width;
  const auto& q = maps.quality;

  std::vector<std::uint8_t> candidate(q.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = q[maps.index(x, y)];
      if (!(v > config.threshold)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if ((dx == 0 && dy == 0) || xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          if (q[maps.index(xx, yy)] > v) {
            is_max = false;
            break;
          }
        }
      }
      candidate[maps.index(x, y)] = is_max ? 1 : 0;
    }
  }

  struct Plateau {
    Peak peak;
    std::size_t first = 0;  // row-major index of the first member
  };
  std::vector<Plateau> plateaus;
  std::vector<std::uint8_t> seen(q.size(), 0);
  std::vector<PixelCoord> members;
  std::deque<PixelCoord> frontier;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = maps.index(x, y);
      if (!candidate[start] || seen[start]) continue;
      const double v = q[start];
      members.clear();
      frontier.assign(1, PixelCoord{x, y});
      seen[start] = 1;
      double sx = 0.0, sy = 0.0;
      while (!frontier.empty()) {
        const PixelCoord p = frontier.front();
        frontier.pop_front();
        members.push_back(p);
        sx += p.x;
        sy += p.y;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = p.x + dx, yy = p.y + dy;
            if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
            const std::size_t j = maps.index(xx, yy);
            if (seen[j] || !candidate[j] || q[j] != v) continue;
            seen[j] = 1;
            frontier.push_back({xx, yy});
          }
        }
      }
      const double cx = sx / static_cast<double>(members.size());
      const double cy = sy / static_cast<double>(members.size());
      std::sort(members.begin(), members.end(),
                [](const PixelCoord& a, const PixelCoord& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
      PixelCoord best = members.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (const PixelCoord& p : members) {
        const double d = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      plateaus.push_back({{best, v}, start});
    }
  }

  std::sort(plateaus.begin(), plateaus.end(), [](const Plateau& a, const Plateau& b) {
    if (a.peak.quality != b.peak.quality) return a.peak.quality > b.peak.quality;
    return a.first < b.first;
  });

  std::vector<Peak> peaks;
  const double min_d2 = config.min_distance * config.min_distance;
  for (const auto& plateau : plateaus) {
    if (peaks.size() >= n) break;
    const bool far_enough = std::all_of(peaks.begin(), peaks.end(), [&](const Peak& p) {
      const double dx = p.pixel.x - plateau.peak.pixel.x;
      const double dy = p.pixel.y - plateau.peak.pixel.y;
      return dx * dx + dy * dy >= min_d2;
    });
    if (far_enough) peaks.push_back(plateau.peak);
  }
  return peaks;
}

std::vector<GraspRectangle> decode_grasps(const GraspMaps& maps, std::size_t n, double max_width,
                                          const PeakConfig& config) {
  if (n == 0) throw std::invalid_argument("decode_grasps needs n >= 1");
  if (!(max_width > 0.0)) throw std::invalid_argument("max_width must be positive");
  if (!(config.height_ratio > 0.0)) throw std::invalid_argument("height_ratio must be positive");
  maps.validate();
  std::vector<GraspRectangle> grasps;
  for (const Peak& peak : find_peaks(maps, std::numeric_limits<std::size_t>::max(), config)) {
    if (grasps.size() >= n) break;
    const std::size_t i = maps.index(peak.pixel.x, peak.pixel.y);
    const double opening = maps.width_map[i] * max_width;
    if (!(opening > 0.0)) continue;  // no usable width at this peak
    grasps.emplace_back(Point2d{static_cast<double>(peak.pixel.x), static_cast<double>(peak.pixel.y)},
                        maps.angle[i], opening, opening * config.height_ratio);
  }
  return grasps;
}

MapImages export_map_images(const GraspMaps& maps) {
  maps.validate();
  MapImages images;
  for (GrayImage* img : {&images.quality, &images.angle, &images.width}) {
    img->height = maps.height;
    img->width = maps.width;
    img->bit_depth = 16;
    img->pixels.resize(maps.quality.size());
  }
  for (std::size_t i = 0; i < maps.quality.size(); ++i) {
    images.quality.pixels[i] = to_u16(maps.quality[i]);
    images.width.pixels[i] = to_u16(maps.width_map[i]);
    images.angle.pixels[i] = to_u16((maps.angle[i] + kPi / 2.0) / kPi);
  }
  return images;
}

GraspMaps import_map_images(const MapImages& images) {
  const int h = images.quality.height;
  const int w = images.quality.width;
  for (const GrayImage* img : {&images.angle, &images.width}) {
    if (img->height != h || img->width != w) throw std::invalid_argument("map images differ in size");
  }
  const auto scale = [](const GrayImage& img, std::size_t i) {
    const double maxv = img.bit_depth == 16 ? 65535.0 : 255.0;
    return img.pixels[i] / maxv;
  };
  GraspMaps maps(h, w);
  for (std::size_t i = 0; i < maps.quality.size(); ++i) {
    maps.quality[i] = scale(images.quality, i);
    maps.width_map[i] = scale(images.width, i);
    maps.angle[i] = scale(images.angle, i) * kPi - kPi / 2.0;
  }
  return maps;
}

}  // namespace refgrasp
