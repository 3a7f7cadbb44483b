#include "refgrasp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "refgrasp/parallel.hpp"
#include "refgrasp/rng.hpp"

namespace refgrasp {

namespace {

bool boxes_clear(const BBox& a, const BBox& b, int gap) {
  return a.x + a.w + gap <= b.x || b.x + b.w + gap <= a.x || a.y + a.h + gap <= b.y || b.y + b.h + gap <= a.y;
}

bool corners_inside(const GraspRectangle& g, int height, int width) {
  for (const Point2d& p : rect_corners(g))
    if (p.x < 0.0 || p.y < 0.0 || p.x > width - 1 || p.y > height - 1) return false;
  return true;
}

// Painted regions must not touch, so each grasp decodes as its own plateau.
bool region_free(const std::vector<PixelCoord>& region, const Mask& painted) {
  for (const PixelCoord& p : region)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (painted.in_bounds(p.x + dx, p.y + dy) && painted.at(p.x + dx, p.y + dy)) return false;
  return true;
}

const SynthObjectType& choose_type(const SynthConfig& config, const std::set<std::string>& used_instances,
                                   const std::vector<std::string>& placed_categories, Rng& rng) {
  std::vector<const SynthObjectType*> available;
  for (const auto& t : config.vocabulary)
    if (!used_instances.count(t.instance_name)) available.push_back(&t);
  if (available.empty()) throw SynthError("vocabulary has too few distinct instances for the object count");

  std::vector<const SynthObjectType*> repeats;
  for (const auto* t : available)
    if (std::find(placed_categories.begin(), placed_categories.end(), t->category) != placed_categories.end())
      repeats.push_back(t);
  const bool repeat = bernoulli(rng, config.repeat_category_probability);
  const auto& pool = repeat && !repeats.empty() ? repeats : available;
  return *pool[uniform_index(rng, pool.size())];
}

}  // namespace

const std::vector<SynthObjectType>& default_synth_vocabulary() {
  static const std::vector<SynthObjectType> vocab = {
      {"cereal box", "corn flakes", "yellow", "original"},
      {"cereal box", "chocolate corn flakes", "brown", "chocolate"},
      {"cereal box", "honey loops", "yellow", "honey"},
      {"cereal box", "muesli", "blue", "fruit"},
      {"bowl", "ceramic bowl", "white", "ceramic"},
      {"bowl", "plastic bowl", "green", "plastic"},
      {"bowl", "wooden bowl", "brown", "wooden"},
      {"mug", "coffee mug", "black", "coffee"},
      {"mug", "travel mug", "black", "travel"},
      {"apple", "gala apple", "red", "gala"},
      {"apple", "granny smith apple", "green", "granny smith"},
      {"apple", "golden apple", "yellow", "golden"},
      {"soda can", "coca-cola can", "red", "coca-cola"},
      {"soda can", "sprite can", "green", "sprite"},
      {"soda can", "fanta can", "orange", "fanta"},
      {"tissue box", "kleenex box", "blue", "kleenex"},
      {"tissue box", "tempo tissues", "white", "tempo"},
      {"marker", "whiteboard marker", "black", "whiteboard"},
      {"marker", "permanent marker", "black", "permanent"},
      {"flashlight", "flashlight", "black", std::nullopt},
      {"banana", "banana", "yellow", std::nullopt},
  };
  return vocab;
}

void SynthConfig::validate() const {
  const auto fail = [](const char* why) { throw std::invalid_argument(std::string("synth config: ") + why); };
  if (min_objects < 1 || max_objects < min_objects) fail("object count range must satisfy 1 <= min <= max");
  if (height <= 0 || width <= 0) fail("image size must be positive");
  if (min_size < 8 || max_size < min_size || max_size > std::min(height, width)) fail("object size range is invalid");
  if (min_separation < 0) fail("separation must be nonnegative");
  if (min_grasps < 1 || max_grasps < min_grasps) fail("grasp count range must satisfy 1 <= min <= max");
  if (min_grasp_separation < 0.0) fail("grasp separation must be nonnegative");
  if (ellipse_probability < 0.0 || ellipse_probability > 1.0) fail("ellipse probability must lie in [0, 1]");
  if (repeat_category_probability < 0.0 || repeat_category_probability > 1.0)
    fail("repeat probability must lie in [0, 1]");
  if (max_width <= max_size) fail("max_width must exceed every possible grasp width");
  if (max_attempts < 1) fail("max_attempts must be positive");
  std::map<std::string, std::set<std::string>> per_category;
  for (const auto& t : vocabulary) per_category[t.category].insert(t.instance_name);
  if (std::none_of(per_category.begin(), per_category.end(), [](const auto& kv) { return kv.second.size() >= 2; }))
    fail("vocabulary needs a category with at least two instances");
}

SceneGraph generate_synthetic_scene(const SynthConfig& config, std::uint64_t seed, const std::string& scene_id) {
  config.validate();
  Rng rng(seed);
  SceneGraph scene;
  scene.scene_id = scene_id;
  scene.height = config.height;
  scene.width = config.width;

  const int count = uniform_int(rng, config.min_objects, config.max_objects);
  std::set<std::string> used_instances;
  std::vector<std::string> placed_categories;
  std::vector<Point2d> grasp_centers;
  Mask painted(config.height, config.width);

  for (int id = 1; id <= count; ++id) {
    const SynthObjectType& type = choose_type(config, used_instances, placed_categories, rng);
    bool placed = false;
    for (int attempt = 0; attempt < config.max_attempts && !placed; ++attempt) {
      const int bw = uniform_int(rng, config.min_size, config.max_size);
      const int bh = uniform_int(rng, config.min_size, config.max_size);
      const BBox box{uniform_int(rng, 0, config.width - bw), uniform_int(rng, 0, config.height - bh), bw, bh};
      const bool clear = std::all_of(scene.objects.begin(), scene.objects.end(),
                                     [&](const ObjectNode& o) { return boxes_clear(box, o.bbox, config.min_separation); });
      if (!clear) continue;
      const bool ellipse = bernoulli(rng, config.ellipse_probability);
      ObjectNode o;
      o.id = id;
      o.category = type.category;
      o.instance_name = type.instance_name;
      o.color = type.color;
      o.instance_attribute = type.instance_attribute;
      o.mask = ellipse ? ellipse_mask(config.height, config.width, box) : rectangle_mask(config.height, config.width, box);
      o.bbox = *o.mask.bbox();
      o.centroid = o.mask.centroid();

      const int wanted = uniform_int(rng, config.min_grasps, config.max_grasps);
      Mask trial_painted = painted;
      std::vector<Point2d> trial_centers = grasp_centers;
      const double side = std::min(bw, bh);
      for (int tries = 0; tries < 60 && static_cast<int>(o.grasps.size()) < wanted; ++tries) {
        const Point2d c{uniform_real(rng, box.x + 0.2 * bw, box.x + 0.8 * bw),
                        uniform_real(rng, box.y + 0.2 * bh, box.y + 0.8 * bh)};
        const double angle = uniform_real(rng, -kPi / 2, kPi / 2);
        const double width = uniform_real(rng, 0.45, 0.85) * side;
        const double height = std::max(6.0, width * uniform_real(rng, 0.45, 0.6));
        // Quantized up front so the stored grasp paints exactly the checked region.
        const GraspRectangle g({quantize6(c.x), quantize6(c.y)}, quantize6(angle), quantize6(width), quantize6(height));
        const PixelCoord px = nearest_pixel(g.center(), config.height, config.width);
        if (!o.mask.at(px.x, px.y)) continue;
        if (!corners_inside(g, config.height, config.width)) continue;
        const bool far = std::all_of(trial_centers.begin(), trial_centers.end(), [&](const Point2d& p) {
          return std::hypot(p.x - g.center().x, p.y - g.center().y) >= config.min_grasp_separation;
        });
        if (!far) continue;
        const auto region = grasp_paint_region(g, config.height, config.width);
        if (!region_free(region, trial_painted)) continue;
        for (const PixelCoord& p : region) trial_painted.set(p.x, p.y);
        trial_centers.push_back(g.center());
        o.grasps.push_back(g);
      }
      if (static_cast<int>(o.grasps.size()) < config.min_grasps) continue;

      painted = std::move(trial_painted);
      grasp_centers = std::move(trial_centers);
      const double depth = 1.2 - 0.5 * o.centroid->y / config.height + uniform_real(rng, -0.02, 0.02);
      o.depth_m = depth;
      used_instances.insert(o.instance_name);
      placed_categories.push_back(o.category);
      scene.objects.push_back(std::move(o));
      placed = true;
    }
    if (!placed)
      throw SynthError("scene '" + scene_id + "': could not place object " + std::to_string(id) + " after " +
                       std::to_string(config.max_attempts) + " attempts");
  }
  quantize_scene(scene);
  validate_scene(scene);
  resolve_derived(scene, config.relation_config);
  return scene;
}

Dataset generate_synthetic_dataset(const SynthDatasetConfig& config, unsigned threads) {
  config.scene.validate();
  const std::uint64_t seed = config.generation.seed;
  std::vector<SceneGraph> scenes(config.scenes);
  parallel_for(config.scenes, threads, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%05zu", i);
    scenes[i] = generate_synthetic_scene(config.scene, derive_seed(seed, std::string("scene:") + id), id);
  });

  Dataset ds;
  ds.name = "synthetic";
  ds.relation_config = config.scene.relation_config;
  for (auto& s : scenes) {
    std::string id = s.scene_id;
    ds.scenes.emplace(std::move(id), std::move(s));
  }
  assign_splits(ds.scenes, seed, config.splits);
  ds.catalog = default_catalog();
  std::vector<const SceneGraph*> ptrs;
  for (const auto& [id, s] : ds.scenes) ptrs.push_back(&s);
  augment_lexicon(ds.catalog.lexicon, ptrs);
  ds.tuples = generate_expressions(ptrs, ds.catalog, config.generation, config.families, threads);
  sort_tuples(ds.tuples);
  return ds;
}

void NoiseSpec::validate() const {
  const auto fail = [](const char* why) { throw std::invalid_argument(std::string("noise: ") + why); };
  if (erosion_radius < 0 || dilation_radius < 0) fail("radii must be nonnegative");
  if (!(center_jitter_px >= 0.0) || !(angle_jitter_rad >= 0.0) || !(width_scale_jitter >= 0.0))
    fail("jitter magnitudes must be nonnegative");
  if (width_scale_jitter >= 1.0) fail("width scale jitter must be below 1");
  if (!std::isfinite(angle_offset_rad)) fail("angle offset must be finite");
  if (!(substitution_probability >= 0.0 && substitution_probability <= 1.0)) fail("substitution probability must lie in [0, 1]");
}

Prediction oracle_predict(const SceneGraph& scene, const ReferringExpression& tuple, const NoiseSpec& noise,
                          std::uint64_t seed) {
  noise.validate();
  Rng rng(derive_seed(seed, tuple.tuple_id));
  const ObjectNode& target = scene.get(tuple.target_id);
  const ObjectNode* source = &target;

  // Draws happen whether or not a corruption is active, so changing one noise
  // knob leaves the other corruptions' random values unchanged.
  const double u_sub = uniform_real(rng, 0.0, 1.0);
  std::vector<const ObjectNode*> rivals;
  for (const auto& o : scene.objects)
    if (o.id != target.id && o.category == target.category) rivals.push_back(&o);
  if (!rivals.empty()) {
    const std::size_t pick = uniform_index(rng, rivals.size());
    if (u_sub < noise.substitution_probability) source = rivals[pick];
  }

  Prediction p;
  p.tuple_id = tuple.tuple_id;
  Mask mask = source->mask;
  if (noise.erosion_radius > 0) mask = erode(mask, noise.erosion_radius);
  if (noise.dilation_radius > 0) mask = dilate(mask, noise.dilation_radius);
  p.mask = std::move(mask);

  p.grasps.emplace();
  const std::size_t n = source->grasps.size();
  for (std::size_t i = 0; i < n; ++i) {
    const GraspRectangle& g = source->grasps[i];
    const double dx = uniform_real(rng, -1.0, 1.0) * noise.center_jitter_px;
    const double dy = uniform_real(rng, -1.0, 1.0) * noise.center_jitter_px;
    const double da = uniform_real(rng, -1.0, 1.0) * noise.angle_jitter_rad;
    const double scale = 1.0 + uniform_real(rng, -1.0, 1.0) * noise.width_scale_jitter;
    p.grasps->emplace_back(Point2d{g.center().x + dx, g.center().y + dy}, g.angle() + noise.angle_offset_rad + da,
                           g.width() * scale, g.height() * scale);
    p.confidences.push_back(static_cast<double>(n - i) / static_cast<double>(n));
  }
  return p;
}

std::vector<Prediction> oracle_predictions(const Dataset& dataset, const NoiseSpec& noise, std::uint64_t seed,
                                           unsigned threads) {
  noise.validate();
  std::vector<Prediction> out(dataset.tuples.size());
  parallel_for(dataset.tuples.size(), threads, [&](std::size_t i) {
    const auto& e = dataset.tuples[i];
    out[i] = oracle_predict(dataset.scene(e.scene_id), e, noise, seed);
  });
  return out;
}

}  // namespace refgrasp
