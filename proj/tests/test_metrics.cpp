#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "refgrasp/image_io.hpp"
#include "refgrasp/metrics.hpp"
#include "refgrasp/synth.hpp"

using namespace refgrasp;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Mask random_mask(Rng& rng, int h, int w, double p) {
  Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (bernoulli(rng, p)) m.set(x, y);
  return m;
}

Dataset small_dataset(std::size_t scenes = 10) {
  SynthDatasetConfig cfg;
  cfg.scenes = scenes;
  return generate_synthetic_dataset(cfg, 2);
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("refgrasp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("mask IoU matches the per-pixel oracle") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Mask a = random_mask(rng, 30, 40, 0.3), b = random_mask(rng, 30, 40, 0.3);
    CHECK(ris_iou(a, b) == oracle::mask_iou(a, b));
    CHECK(ris_iou(a, a) == 1.0);
  }
  CHECK(ris_iou(Mask(4, 4), Mask(4, 4)) == 1.0);
  CHECK_THROWS_AS(ris_iou(Mask(4, 4), Mask(4, 5)), MetricsError);
}

TEST_CASE("precision counts strictly greater values") {
  const std::vector<double> ious{0.5, 0.55, 0.7, 0.95, 0.0};
  CHECK(precision_at(ious, 0.5) == doctest::Approx(60.0));
  CHECK(precision_at(ious, 0.7) == doctest::Approx(20.0));
  CHECK(precision_at(ious, 0.9) == doctest::Approx(20.0));
  CHECK_THROWS_AS(precision_at(std::vector<double>{}, 0.5), MetricsError);

  Rng rng(2);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(uniform_real(rng, 0, 1));
  double prev = 101;
  for (double x : kPrecisionThresholds) {
    const double p = precision_at(v, x);
    CHECK(p <= prev);
    prev = p;
    CHECK(p == doctest::Approx(100.0 * std::count_if(v.begin(), v.end(), [&](double u) { return u > x; }) / v.size()));
  }
}

TEST_CASE("grasp success matches the all-pairs oracle") {
  Rng rng(3);
  int hits = 0;
  for (int t = 0; t < 400; ++t) {
    std::vector<GraspRectangle> gts, preds;
    for (int i = 0, n = uniform_int(rng, 1, 3); i < n; ++i)
      gts.emplace_back(Point2d{uniform_real(rng, 40, 60), uniform_real(rng, 40, 60)}, uniform_real(rng, -2, 2),
                       uniform_real(rng, 10, 40), uniform_real(rng, 5, 20));
    for (int i = 0, n = uniform_int(rng, 0, 6); i < n; ++i)
      preds.emplace_back(Point2d{uniform_real(rng, 35, 65), uniform_real(rng, 35, 65)}, uniform_real(rng, -2, 2),
                         uniform_real(rng, 10, 40), uniform_real(rng, 5, 20));
    for (std::size_t n : {1, 3, 25}) {
      const bool got = grasp_success(preds, gts, n);
      CHECK(got == oracle::grasp_match(preds, gts, n));
      hits += got;
    }
    CHECK(grasp_success(preds, gts, 1) <= grasp_success(preds, gts, 25));
  }
  CHECK(hits > 50);
  CHECK_THROWS_AS(grasp_success(std::vector<GraspRectangle>{}, std::vector<GraspRectangle>{}, 1), std::invalid_argument);
}

TEST_CASE("grasp success thresholds") {
  const GraspRectangle gt({50, 50}, 0.0, 30, 10);
  const std::vector<GraspRectangle> gts{gt};
  const auto ok = [&](GraspRectangle p) { return grasp_success(std::vector<GraspRectangle>{p}, gts, 1); };
  CHECK(ok(gt));
  CHECK(ok(GraspRectangle({50, 50}, 29.0 * kPi / 180, 30, 10)));
  CHECK_FALSE(ok(GraspRectangle({50, 50}, 31.0 * kPi / 180, 30, 10)));
  CHECK(ok(GraspRectangle({50, 50}, kPi - 0.1, 30, 10)));  // pi-periodic
  CHECK_FALSE(ok(GraspRectangle({80, 50}, 0.0, 30, 10)));
  // Shifted by 18 px: IoU = 12/48 = 0.25 exactly, which fails the strict test.
  CHECK(rect_iou(GraspRectangle({68, 50}, 0.0, 30, 10), gt) == doctest::Approx(0.25));
  CHECK_FALSE(ok(GraspRectangle({68.01, 50}, 0.0, 30, 10)));
  CHECK(ok(GraspRectangle({67.9, 50}, 0.0, 30, 10)));
}

TEST_CASE("predictions file round trip and loading rules") {
  const fs::path dir = temp_dir("preds");
  Rng rng(4);
  std::vector<Prediction> preds(2);
  preds[0].tuple_id = "a#0";
  preds[0].mask = random_mask(rng, 12, 9, 0.5);
  preds[0].grasps = std::vector<GraspRectangle>{GraspRectangle({3.25, 4.5}, 0.1, 5, 2), GraspRectangle({1, 1}, -1, 4, 2)};
  preds[0].confidences = {0.9, 0.4};
  preds[1].tuple_id = "a#1";
  preds[1].mask = Mask(12, 9);
  save_predictions(dir / "p.jsonl", preds);
  const auto back = load_predictions(dir / "p.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].mask == preds[0].mask);
  CHECK(back[0].grasps == preds[0].grasps);
  CHECK(back[0].confidences == preds[0].confidences);
  CHECK(back[1].mask == preds[1].mask);
  CHECK_FALSE(back[1].grasps.has_value());

  // Grasps are reordered by confidence; masks may be PNG paths; maps are read from PNGs.
  write_mask_png(dir / "m.png", *preds[0].mask);
  const std::vector<GraspRectangle> gts{GraspRectangle({30, 20}, 0.4, 20, 10)};
  const MapImages imgs = export_map_images(render_grasp_maps(gts, 40, 60));
  write_gray_png(dir / "q.png", imgs.quality);
  write_gray_png(dir / "a.png", imgs.angle);
  write_gray_png(dir / "w.png", imgs.width);
  spit(dir / "q.jsonl",
       R"({"tuple_id":"x","mask":"m.png","grasps":[{"x":1,"y":1,"angle":0,"width":4,"height":2,"confidence":0.1},)"
       R"({"x":2,"y":2,"angle":0,"width":4,"height":2,"confidence":0.8}]})"
       "\n\n"
       R"({"tuple_id":"y","maps":{"quality":"q.png","angle":"a.png","width":"w.png"}})"
       "\n");
  const auto q = load_predictions(dir / "q.jsonl");
  REQUIRE(q.size() == 2);
  CHECK(q[0].mask == preds[0].mask);
  CHECK((*q[0].grasps)[0].center() == Point2d{2, 2});
  CHECK(q[0].confidences == std::vector<double>{0.8, 0.1});
  REQUIRE(q[1].maps.has_value());
  CHECK(decode_grasps(*q[1].maps, 1).size() == 1);

  spit(dir / "dup.jsonl", "{\"tuple_id\":\"x\",\"mask\":\"m.png\"}\n{\"tuple_id\":\"x\",\"mask\":\"m.png\"}\n");
  CHECK_THROWS_WITH_AS(load_predictions(dir / "dup.jsonl"), doctest::Contains("line 2"), MetricsError);
  spit(dir / "bad.jsonl", "{\"tuple_id\":\"x\"}\n");
  CHECK_THROWS_AS(load_predictions(dir / "bad.jsonl"), MetricsError);
  spit(dir / "junk.jsonl", "{\"tuple_id\":\"x\",\"mask\":\"m.png\"}\nnot json\n");
  CHECK_THROWS_WITH_AS(load_predictions(dir / "junk.jsonl"), doctest::Contains("line 2"), MetricsError);
  CHECK_THROWS_AS(load_predictions(dir / "missing.jsonl"), MetricsError);
  fs::remove_all(dir);
}

TEST_CASE("evaluate agrees with brute-force recomputation on noisy predictions") {
  const Dataset ds = small_dataset(12);
  NoiseSpec noise;
  noise.erosion_radius = 1;
  noise.center_jitter_px = 6;
  noise.angle_jitter_rad = 0.5;
  noise.width_scale_jitter = 0.4;
  noise.substitution_probability = 0.2;
  auto preds = oracle_predictions(ds, noise, 11, 2);
  preds.erase(preds.begin() + 3);  // one tuple without a prediction
  EvalOptions opts;
  opts.grasp_cap = 2;
  const EvalReport r = evaluate(preds, ds, opts);
  REQUIRE(r.samples.size() == ds.tuples.size());

  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id[p.tuple_id] = &p;
  std::size_t grasp_samples = 0, j1 = 0, jany = 0;
  double sum = 0;
  for (std::size_t i = 0; i < ds.tuples.size(); ++i) {
    const auto& e = ds.tuples[i];
    const auto& s = r.samples[i];
    const ObjectNode& target = ds.target(e);
    CHECK(s.tuple_id == e.tuple_id);
    const auto it = by_id.find(e.tuple_id);
    if (it == by_id.end()) {
      CHECK_FALSE(s.has_mask);
      CHECK(s.iou == 0.0);
      CHECK_FALSE(s.j_any);
    } else {
      CHECK(s.iou == oracle::mask_iou(*it->second->mask, target.mask));
      if (!target.grasps.empty()) {
        CHECK(s.j1 == oracle::grasp_match(*it->second->grasps, target.grasps, 1));
        CHECK(s.j_any == oracle::grasp_match(*it->second->grasps, target.grasps, 2));
      }
    }
    CHECK(s.grasp_scored == !target.grasps.empty());
    CHECK((!s.j1 || s.j_any));
    sum += s.iou;
    if (s.grasp_scored) {
      ++grasp_samples;
      j1 += s.j1;
      jany += s.j_any;
    }
  }
  CHECK(r.overall.samples == ds.tuples.size());
  CHECK(r.overall.grasp_samples == grasp_samples);
  CHECK(r.overall.mean_iou == doctest::Approx(100.0 * sum / ds.tuples.size()));
  CHECK(r.overall.j_at_1 == doctest::Approx(100.0 * j1 / grasp_samples));
  CHECK(r.overall.j_at_any == doctest::Approx(100.0 * jany / grasp_samples));
  CHECK(r.overall.j_at_any >= r.overall.j_at_1);
  for (std::size_t i = 1; i < 5; ++i) CHECK(r.overall.precision[i] <= r.overall.precision[i - 1]);

  std::size_t family_total = 0;
  for (const auto& [f, s] : r.per_family) {
    family_total += s.samples;
    CHECK(s.j_at_any >= s.j_at_1);
  }
  CHECK(family_total == r.overall.samples);

  const Json j = report_to_json(r);
  CHECK(j["overall"]["samples"].get<std::size_t>() == r.overall.samples);
  CHECK(format_report_table(r).find("J@1") != std::string::npos);
}

TEST_CASE("evaluate options") {
  const Dataset ds = small_dataset(8);
  const auto preds = oracle_predictions(ds, NoiseSpec{}, 1, 1);

  EvalOptions opts;
  opts.split = Split::Test;
  const EvalReport test_only = evaluate(preds, ds, opts);
  std::size_t n_test = 0;
  for (const auto& e : ds.tuples) n_test += ds.scene(e.scene_id).split == Split::Test;
  CHECK(test_only.overall.samples == n_test);

  opts = EvalOptions{};
  opts.families = {Family::Relation};
  const EvalReport rel = evaluate(preds, ds, opts);
  for (const auto& s : rel.samples) CHECK(s.family == Family::Relation);
  CHECK(rel.per_family.size() == 1);

  opts = EvalOptions{};
  opts.grasps = false;
  const EvalReport masks_only = evaluate(preds, ds, opts);
  CHECK(masks_only.overall.grasp_samples == 0);
  CHECK_FALSE(report_to_json(masks_only)["overall"].contains("j@1"));

  auto extra = preds;
  extra.push_back(preds.front());
  extra.back().tuple_id = "nope#1";
  CHECK_THROWS_WITH_AS(evaluate(extra, ds), doctest::Contains("nope#1"), MetricsError);
  extra = preds;
  extra.push_back(preds.front());
  CHECK_THROWS_WITH_AS(evaluate(extra, ds), doctest::Contains("duplicate"), MetricsError);

  // A predicted mask of the wrong size names its tuple.
  auto wrong = preds;
  wrong.front().mask = Mask(3, 3);
  CHECK_THROWS_WITH_AS(evaluate(wrong, ds), doctest::Contains(wrong.front().tuple_id.c_str()), MetricsError);
}

TEST_CASE("map predictions are decoded with the grasp cap") {
  const Dataset ds = small_dataset(4);
  std::vector<Prediction> preds;
  for (const auto& e : ds.tuples) {
    const ObjectNode& t = ds.target(e);
    if (t.grasps.empty()) continue;
    Prediction p;
    p.tuple_id = e.tuple_id;
    p.maps = render_grasp_maps(t.grasps, t.mask.height(), t.mask.width());
    preds.push_back(std::move(p));
  }
  EvalOptions opts;
  opts.masks = false;
  const EvalReport r = evaluate(preds, ds, opts);
  CHECK(r.overall.j_at_any == doctest::Approx(100.0));
  for (const auto& s : r.samples)
    if (s.grasp_scored) CHECK(s.grasps_considered >= 1);
  opts.grasp_cap = 1;
  for (const auto& s : evaluate(preds, ds, opts).samples) CHECK(s.grasps_considered <= 1);
}
