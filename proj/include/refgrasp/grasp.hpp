#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "refgrasp/image_io.hpp"
#include "refgrasp/mask.hpp"

namespace refgrasp {

inline constexpr double kPi = 3.14159265358979323846;

/// Default normalization constant for the width map; must exceed every
/// gripper width in the data.
inline constexpr double kDefaultMaxWidth = 150.0;

/// Maps any angle into [-pi/2, pi/2). A parallel-jaw grasp is pi-periodic.
double normalize_grasp_angle(double angle);

/// Planar 4-DoF grasp in pixel coordinates (x right, y down).
///
/// The grasp axis points along (cos angle, sin angle); `width` is the gripper
/// opening measured along that axis and `height` the jaw extent across it.
class GraspRectangle {
 public:
  /// Throws std::invalid_argument unless width and height are positive and
  /// all parameters are finite. The angle is normalized.
  GraspRectangle(Point2d center, double angle, double width, double height);

  Point2d center() const { return center_; }
  double angle() const { return angle_; }
  double width() const { return width_; }
  double height() const { return height_; }

  friend bool operator==(const GraspRectangle&, const GraspRectangle&) = default;

 private:
  Point2d center_;
  double angle_;
  double width_;
  double height_;
};

using Quad = std::array<Point2d, 4>;

/// Corners with positive shoelace orientation; the first edge runs along the
/// grasp axis.
Quad rect_corners(const GraspRectangle& rect);

/// Inverse of rect_corners: p0->p1 is the grasp axis (Cornell convention).
GraspRectangle rect_from_corners(const Quad& corners);

double polygon_area(std::span<const Point2d> polygon);  // signed, shoelace

/// Sutherland-Hodgman: clips `subject` against the half-planes of the convex,
/// positively oriented polygon `clip`.
std::vector<Point2d> clip_convex(std::span<const Point2d> subject, std::span<const Point2d> clip);

double rect_intersection_area(const GraspRectangle& a, const GraspRectangle& b);
double rect_iou(const GraspRectangle& a, const GraspRectangle& b);

/// Smallest |a - b + k*pi| over integer k, in degrees; result in [0, 90].
double angle_difference_deg(double a, double b);

/// Dense per-pixel grasp maps, row-major H x W.
struct GraspMaps {
  int height = 0;
  int width = 0;
  std::vector<double> quality;    // Q in [0, 1]
  std::vector<double> angle;      // Theta in [-pi/2, pi/2]
  std::vector<double> width_map;  // L = opening / max_width, in [0, 1]
  std::optional<Mask> mask;

  GraspMaps() = default;
  GraspMaps(int h, int w);

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  /// Throws std::invalid_argument when sizes or value ranges are inconsistent.
  void validate() const;
};

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// True when the point's nearest pixel lies in an H x W image.
bool point_in_image(Point2d p, int height, int width);

/// Pixel nearest to a continuous point, clamped into the image.
PixelCoord nearest_pixel(Point2d p, int height, int width);

/// Pixels painted for one grasp: centers inside the full-width, central-third
/// height band, plus the center pixel itself.
std::vector<PixelCoord> grasp_paint_region(const GraspRectangle& rect, int height, int width);

/// Ground-truth maps. Later grasps overwrite earlier ones where regions meet.
/// Throws if a center lies outside the image or a width is >= max_width.
GraspMaps render_grasp_maps(std::span<const GraspRectangle> grasps, int height, int width,
                            double max_width = kDefaultMaxWidth);

struct PeakConfig {
  double threshold = 0.2;     // peaks need Q strictly above this
  double min_distance = 10.0; // px, between accepted peaks
  double height_ratio = 0.5;  // decoded jaw height = ratio * opening
};

struct Peak {
  PixelCoord pixel;
  double quality = 0.0;
};

/// Local maxima of Q, strongest first. A plateau of equal-valued maxima
/// yields one peak: the member pixel nearest the plateau centroid.
std::vector<Peak> find_peaks(const GraspMaps& maps, std::size_t n, const PeakConfig& config = {});

/// Up to n grasps read off the maps at the peaks of Q. Empty when no pixel
/// exceeds the threshold.
std::vector<GraspRectangle> decode_grasps(const GraspMaps& maps, std::size_t n, double max_width = kDefaultMaxWidth,
                                          const PeakConfig& config = {});

/// 16-bit visualization images: Q and L scaled to [0, 65535]; Theta mapped
/// affinely from [-pi/2, pi/2].
struct MapImages {
  GrayImage quality;
  GrayImage angle;
  GrayImage width;
};

MapImages export_map_images(const GraspMaps& maps);
GraspMaps import_map_images(const MapImages& images);

}  // namespace refgrasp
