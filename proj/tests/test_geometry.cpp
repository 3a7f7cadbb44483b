#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "refgrasp/grasp.hpp"
#include "refgrasp/image_io.hpp"
#include "refgrasp/mask.hpp"
#include "refgrasp/rng.hpp"

using namespace refgrasp;

namespace {

Mask random_mask(Rng& rng, int h, int w, double p) {
  Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (bernoulli(rng, p)) m.set(x, y);
  return m;
}

Mask brute_morph(const Mask& m, int r, bool erosion) {
  Mask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true, any = false;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const bool v = m.in_bounds(x + dx, y + dy) && m.at(x + dx, y + dy);
          all = all && v;
          any = any || v;
        }
      if (erosion ? all : any) out.set(x, y);
    }
  return out;
}

GraspRectangle random_rect(Rng& rng) {
  return GraspRectangle({uniform_real(rng, 20, 60), uniform_real(rng, 20, 60)}, uniform_real(rng, -4, 4),
                        uniform_real(rng, 8, 40), uniform_real(rng, 4, 20));
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("refgrasp_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("rle round trip and run structure") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Mask m = random_mask(rng, 1 + uniform_int(rng, 0, 30), 1 + uniform_int(rng, 0, 30), 0.4);
    const Rle r = encode_rle(m);
    CHECK(decode_rle(r) == m);
    std::size_t total = 0, fg = 0;
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      total += r.counts[i];
      if (i % 2 == 1) fg += r.counts[i];
      if (i > 0) CHECK(r.counts[i] > 0);
    }
    CHECK(total == static_cast<std::size_t>(m.height() * m.width()));
    CHECK(fg == m.area());
  }
  Rle bad{2, 2, {1, 1}};
  CHECK_THROWS(decode_rle(bad));
}

TEST_CASE("bbox and centroid match brute force") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const Mask m = random_mask(rng, 20, 25, 0.05);
    if (m.none()) {
      CHECK_FALSE(m.bbox().has_value());
      continue;
    }
    int x0 = 99, y0 = 99, x1 = -1, y1 = -1;
    double sx = 0, sy = 0;
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 25; ++x)
        if (m.at(x, y)) {
          x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
          sx += x, sy += y;
        }
    CHECK(*m.bbox() == BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1});
    CHECK(m.centroid()->x == doctest::Approx(sx / m.area()));
    CHECK(m.centroid()->y == doctest::Approx(sy / m.area()));
  }
}

TEST_CASE("erosion and dilation match the brute-force square element") {
  Rng rng(3);
  for (int r : {0, 1, 2, 3}) {
    const Mask m = random_mask(rng, 24, 31, 0.6);
    CHECK(erode(m, r) == brute_morph(m, r, true));
    CHECK(dilate(m, r) == brute_morph(m, r, false));
  }
  const Mask full = rectangle_mask(10, 10, {0, 0, 10, 10});
  CHECK(erode(full, 1).area() == 64);  // outside counts as background
}

TEST_CASE("png round trips") {
  const auto dir = temp_dir("png");
  Rng rng(4);
  const Mask m = random_mask(rng, 17, 23, 0.5);
  write_mask_png(dir / "m.png", m);
  CHECK(read_mask_png(dir / "m.png") == m);

  GrayImage img{5, 7, 16, {}};
  for (int i = 0; i < 35; ++i) img.pixels.push_back(static_cast<std::uint16_t>(i * 1871));
  write_gray_png(dir / "g.png", img);
  const GrayImage back = read_gray_png(dir / "g.png");
  CHECK(back.bit_depth == 16);
  CHECK(back.pixels == img.pixels);
  CHECK_THROWS_AS(read_gray_png(dir / "missing.png"), ImageIoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("grasp angle normalization") {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const double a = uniform_real(rng, -20, 20);
    const double n = normalize_grasp_angle(a);
    CHECK(n >= -kPi / 2);
    CHECK(n < kPi / 2);
    CHECK(oracle::angle_diff_deg(a, n) < 1e-9);
    CHECK(angle_difference_deg(a, n) < 1e-9);
  }
  CHECK(normalize_grasp_angle(kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK_THROWS_AS(GraspRectangle({0, 0}, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(GraspRectangle({0, 0}, 0, 1, -1), std::invalid_argument);
}

TEST_CASE("angle difference against the oracle") {
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    const double a = uniform_real(rng, -kPi, kPi), b = uniform_real(rng, -kPi, kPi);
    const double d = angle_difference_deg(a, b);
    CHECK(d == doctest::Approx(oracle::angle_diff_deg(a, b)).epsilon(1e-9));
    CHECK(d >= 0.0);
    CHECK(d <= 90.0 + 1e-9);
  }
}

TEST_CASE("corner conversion round trip and corner-order invariance") {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const GraspRectangle g = random_rect(rng);
    const Quad q = rect_corners(g);
    CHECK(polygon_area(q) == doctest::Approx(g.width() * g.height()));
    const GraspRectangle back = rect_from_corners(q);
    CHECK(back.center().x == doctest::Approx(g.center().x));
    CHECK(back.center().y == doctest::Approx(g.center().y));
    CHECK(back.width() == doctest::Approx(g.width()));
    CHECK(back.height() == doctest::Approx(g.height()));
    CHECK(angle_difference_deg(back.angle(), g.angle()) < 1e-6);

    // Starting one corner later swaps the axis; half a turn changes nothing.
    const GraspRectangle quarter = rect_from_corners({q[1], q[2], q[3], q[0]});
    CHECK(quarter.width() == doctest::Approx(g.height()));
    CHECK(quarter.height() == doctest::Approx(g.width()));
    CHECK(rect_iou(quarter, g) == doctest::Approx(1.0));
    const GraspRectangle half = rect_from_corners({q[2], q[3], q[0], q[1]});
    CHECK(half.width() == doctest::Approx(g.width()));
    CHECK(angle_difference_deg(half.angle(), g.angle()) < 1e-6);
  }
}

TEST_CASE("rect IoU agrees with the raster oracle") {
  Rng rng(8);
  for (int t = 0; t < 150; ++t) {
    const GraspRectangle a = random_rect(rng), b = random_rect(rng);
    const double clip = rect_iou(a, b);
    CHECK(std::fabs(clip - oracle::raster_iou(a, b)) <= 5e-3);
    CHECK(clip == doctest::Approx(oracle::vertex_set_iou(a, b)).epsilon(1e-9));
    CHECK(clip == doctest::Approx(rect_iou(b, a)));
    CHECK(clip >= 0.0);
    CHECK(clip <= 1.0);
  }
  const GraspRectangle a({10, 10}, 0, 10, 4);
  CHECK(rect_iou(a, a) == doctest::Approx(1.0));
  CHECK(rect_iou(a, GraspRectangle({30, 10}, 0, 10, 4)) == 0.0);
  CHECK(rect_iou(a, GraspRectangle({15, 10}, 0, 10, 4)) == doctest::Approx(1.0 / 3.0));
  CHECK(rect_iou(a, GraspRectangle({10, 10}, kPi / 2, 10, 4)) == doctest::Approx(16.0 / 64.0));
}

TEST_CASE("paint region matches a direct membership test") {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const GraspRectangle g({uniform_real(rng, 0, 63), uniform_real(rng, 0, 47)}, uniform_real(rng, -2, 2),
                           uniform_real(rng, 4, 40), uniform_real(rng, 2, 30));
    const auto region = grasp_paint_region(g, 48, 64);
    std::set<std::pair<int, int>> got;
    for (const auto& p : region) got.insert({p.x, p.y});
    const PixelCoord c = nearest_pixel(g.center(), 48, 64);
    std::set<std::pair<int, int>> want{{c.x, c.y}};
    const GraspRectangle band(g.center(), g.angle(), g.width(), g.height() / 3.0);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 64; ++x)
        if (oracle::inside_rect(band, x, y)) want.insert({x, y});
    CHECK(got == want);
    CHECK(got.size() == region.size());
  }
}

TEST_CASE("render then decode recovers a single grasp") {
  Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const double w = uniform_real(rng, 10, 40);
    const GraspRectangle g({uniform_real(rng, 25, 75), uniform_real(rng, 25, 55)}, uniform_real(rng, -1.5, 1.5), w,
                           w * uniform_real(rng, 0.45, 0.6));
    const std::vector<GraspRectangle> gts{g};
    const GraspMaps maps = render_grasp_maps(gts, 80, 100);
    const auto dec = decode_grasps(maps, 1);
    REQUIRE(dec.size() == 1);
    CHECK(std::fabs(dec[0].center().x - g.center().x) <= 1.0);
    CHECK(std::fabs(dec[0].center().y - g.center().y) <= 1.0);
    CHECK(dec[0].width() == doctest::Approx(g.width()));
    CHECK(angle_difference_deg(dec[0].angle(), g.angle()) < 1e-9);
    CHECK(oracle::grasp_match(dec, gts, 1));
  }
}

TEST_CASE("render rejects bad inputs and decode handles empty maps") {
  const GraspRectangle inside({5, 5}, 0, 10, 4);
  CHECK_THROWS(render_grasp_maps(std::vector<GraspRectangle>{GraspRectangle({50, 5}, 0, 10, 4)}, 20, 20));
  CHECK_THROWS(render_grasp_maps(std::vector<GraspRectangle>{GraspRectangle({5, 5}, 0, 150, 4)}, 20, 20));
  CHECK_THROWS(render_grasp_maps(std::vector<GraspRectangle>{}, 20, 20));
  const GraspMaps empty(20, 20);
  CHECK(decode_grasps(empty, 3).empty());
  CHECK_THROWS(decode_grasps(render_grasp_maps(std::vector<GraspRectangle>{inside}, 20, 20), 0));
}

TEST_CASE("peak finding: plateau representative, ordering and suppression") {
  GraspMaps maps(20, 30);
  const auto set = [&](int x, int y, double q) {
    maps.quality[maps.index(x, y)] = q;
    maps.width_map[maps.index(x, y)] = 0.1;
  };
  for (int x = 2; x <= 6; ++x) set(x, 3, 0.8);  // plateau, centroid at x = 4
  set(20, 10, 0.9);
  set(22, 10, 0.85);  // within 10 px of the strongest peak
  set(10, 18, 0.1);   // below threshold
  const auto peaks = find_peaks(maps, 10);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].pixel == PixelCoord{20, 10});
  CHECK(peaks[1].pixel == PixelCoord{4, 3});
  CHECK(find_peaks(maps, 1).size() == 1);
  PeakConfig loose;
  loose.min_distance = 1.0;
  CHECK(find_peaks(maps, 10, loose).size() == 3);

  maps.width_map[maps.index(20, 10)] = 0.0;
  const auto dec = decode_grasps(maps, 2);
  REQUIRE(dec.size() == 1);  // zero-width peak skipped
  CHECK(dec[0].center() == Point2d{4, 3});
  CHECK(dec[0].width() == doctest::Approx(15.0));
  CHECK(dec[0].height() == doctest::Approx(7.5));
}

TEST_CASE("map image export round trip") {
  const std::vector<GraspRectangle> gts{GraspRectangle({20, 15}, 0.7, 30, 12), GraspRectangle({60, 40}, -1.2, 20, 9)};
  const GraspMaps maps = render_grasp_maps(gts, 60, 90);
  const GraspMaps back = import_map_images(export_map_images(maps));
  for (std::size_t i = 0; i < maps.quality.size(); ++i) {
    CHECK(back.quality[i] == doctest::Approx(maps.quality[i]).epsilon(1e-4));
    CHECK(std::fabs(back.width_map[i] - maps.width_map[i]) < 1e-4);
    if (maps.quality[i] > 0) CHECK(std::fabs(back.angle[i] - maps.angle[i]) < 1e-4);
  }
  CHECK(decode_grasps(back, 2).size() == 2);
}
