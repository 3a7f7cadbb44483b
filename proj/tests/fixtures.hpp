#pragma once

// Small hand-built scenes shared by the unit tests.

#include <optional>
#include <string>
#include <vector>

#include "refgrasp/scene.hpp"

namespace fixture {

struct ObjectSpec {
  std::string category;
  std::string instance;
  std::optional<std::string> color;
  std::optional<std::string> attribute;
  refgrasp::BBox box;
  std::optional<double> depth;
};

inline refgrasp::ObjectNode make_object(int id, const ObjectSpec& spec, int height, int width) {
  refgrasp::ObjectNode o;
  o.id = id;
  o.category = spec.category;
  o.instance_name = spec.instance;
  o.color = spec.color;
  o.instance_attribute = spec.attribute;
  o.mask = refgrasp::rectangle_mask(height, width, spec.box);
  o.bbox = *o.mask.bbox();
  o.centroid = o.mask.centroid();
  o.depth_m = spec.depth;
  o.grasps.emplace_back(*o.centroid, 0.0, std::max(4.0, spec.box.w * 0.6), std::max(2.0, spec.box.h * 0.3));
  return o;
}

inline refgrasp::SceneGraph make_scene(const std::string& id, const std::vector<ObjectSpec>& specs, int height = 120,
                                       int width = 160) {
  refgrasp::SceneGraph s;
  s.scene_id = id;
  s.height = height;
  s.width = width;
  for (std::size_t i = 0; i < specs.size(); ++i) s.objects.push_back(make_object(static_cast<int>(i) + 1, specs[i], height, width));
  refgrasp::resolve_derived(s);
  return s;
}

/// Three cereal boxes and a mug; the chocolate box is closest, the mug sits
/// right of everything.
inline refgrasp::SceneGraph cereal_scene() {
  return make_scene("cereal", {
                                  {"cereal box", "corn flakes", "yellow", "original", {10, 20, 20, 30}, 0.90},
                                  {"cereal box", "chocolate corn flakes", "brown", "chocolate", {50, 60, 20, 30}, 0.70},
                                  {"cereal box", "honey loops", "yellow", "honey", {90, 10, 20, 30}, 0.95},
                                  {"mug", "coffee mug", "white", "coffee", {130, 40, 16, 16}, 0.80},
                              });
}

}  // namespace fixture
