#include "refgrasp/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_set>

namespace refgrasp {

namespace {

constexpr std::array<std::string_view, 9> kPredicateNames = {
    "right", "rear right", "behind", "rear left", "left", "front left", "front", "front right", "on"};
constexpr std::array<std::string_view, 4> kLocationNames = {"leftmost", "rightmost", "furthest", "closest"};
constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

std::string object_context(const SceneGraph& scene, int id) {
  return "scene '" + scene.scene_id + "', object " + std::to_string(id);
}

Point2d require_centroid(const SceneGraph& scene, const ObjectNode& o) {
  if (!o.centroid) throw SceneError(object_context(scene, o.id) + ": missing centroid");
  return *o.centroid;
}

// Index of the extreme element under `better`; ties keep the lowest id.
template <typename Better>
const ObjectNode* pick_extreme(const std::vector<const ObjectNode*>& group, Better better) {
  const ObjectNode* best = nullptr;
  for (const ObjectNode* o : group) {
    if (!best || better(*o, *best) || (!better(*best, *o) && o->id < best->id)) best = o;
  }
  return best;
}

void label_group(const SceneGraph& scene, const std::vector<const ObjectNode*>& group, const std::string& scope,
                 std::vector<LocationLabel>& out) {
  if (group.empty()) return;
  const auto x_of = [&](const ObjectNode& o) { return require_centroid(scene, o).x; };
  const auto y_of = [&](const ObjectNode& o) { return require_centroid(scene, o).y; };
  const bool all_depth = std::all_of(group.begin(), group.end(), [](const ObjectNode* o) { return o->depth_m.has_value(); });

  out.push_back({pick_extreme(group, [&](const ObjectNode& a, const ObjectNode& b) { return x_of(a) < x_of(b); })->id,
                 Location::Leftmost, scope});
  out.push_back({pick_extreme(group, [&](const ObjectNode& a, const ObjectNode& b) { return x_of(a) > x_of(b); })->id,
                 Location::Rightmost, scope});
  if (all_depth) {
    out.push_back({pick_extreme(group, [](const ObjectNode& a, const ObjectNode& b) { return *a.depth_m < *b.depth_m; })->id,
                   Location::Closest, scope});
    out.push_back({pick_extreme(group, [](const ObjectNode& a, const ObjectNode& b) { return *a.depth_m > *b.depth_m; })->id,
                   Location::Furthest, scope});
  } else {
    // Larger image y is nearer the camera in a tilted tabletop view.
    out.push_back({pick_extreme(group, [&](const ObjectNode& a, const ObjectNode& b) { return y_of(a) > y_of(b); })->id,
                   Location::Closest, scope});
    out.push_back({pick_extreme(group, [&](const ObjectNode& a, const ObjectNode& b) { return y_of(a) < y_of(b); })->id,
                   Location::Furthest, scope});
  }
}

}  // namespace

std::string_view to_string(Predicate p) { return kPredicateNames[static_cast<std::size_t>(p)]; }

std::optional<Predicate> parse_predicate(std::string_view text) {
  for (std::size_t i = 0; i < kPredicateNames.size(); ++i)
    if (kPredicateNames[i] == text) return static_cast<Predicate>(i);
  return std::nullopt;
}

bool is_planar(Predicate p) { return p != Predicate::On; }

Predicate inverse(Predicate p) {
  if (!is_planar(p)) throw std::invalid_argument("'on' has no inverse predicate");
  return static_cast<Predicate>((static_cast<int>(p) + 4) % kPlanarPredicateCount);
}

std::string_view to_string(Location l) { return kLocationNames[static_cast<std::size_t>(l)]; }

std::optional<Location> parse_location(std::string_view text) {
  for (std::size_t i = 0; i < kLocationNames.size(); ++i)
    if (kLocationNames[i] == text) return static_cast<Location>(i);
  return std::nullopt;
}

std::string_view to_string(AttributeKind k) { return k == AttributeKind::Color ? "color" : "instance_attribute"; }

std::optional<AttributeKind> parse_attribute_kind(std::string_view text) {
  if (text == "color") return AttributeKind::Color;
  if (text == "instance_attribute") return AttributeKind::Instance;
  return std::nullopt;
}

std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<Split> parse_split(std::string_view text) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i)
    if (kSplitNames[i] == text) return static_cast<Split>(i);
  return std::nullopt;
}

std::vector<Attribute> ObjectNode::attributes() const {
  std::vector<Attribute> out;
  if (color) out.push_back({AttributeKind::Color, *color});
  if (instance_attribute) out.push_back({AttributeKind::Instance, *instance_attribute});
  return out;
}

const ObjectNode* SceneGraph::find(int id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const ObjectNode& SceneGraph::get(int id) const {
  const ObjectNode* o = find(id);
  if (!o) throw SceneError("scene '" + scene_id + "' has no object " + std::to_string(id));
  return *o;
}

Predicate planar_predicate(Point2d d, double sector_offset_deg) {
  if (d.x == 0.0 && d.y == 0.0) throw std::invalid_argument("zero displacement has no direction");
  // On-screen counterclockwise angle: image y points down.
  double phi = std::atan2(-d.y, d.x) * 180.0 / kPi - sector_offset_deg;
  phi = std::fmod(phi, 360.0);
  if (phi < 0.0) phi += 360.0;
  const int sector = static_cast<int>(std::floor((phi + 22.5) / 45.0)) % kPlanarPredicateCount;
  return static_cast<Predicate>(sector);
}

std::vector<RelationEdge> resolve_pairwise_relations(const SceneGraph& scene, const RelationConfig& config) {
  for (const auto& o : scene.objects) require_centroid(scene, o);
  std::vector<RelationEdge> edges;
  for (const auto& a : scene.objects) {
    for (const auto& b : scene.objects) {
      if (a.id == b.id) continue;
      const Point2d d{a.centroid->x - b.centroid->x, a.centroid->y - b.centroid->y};
      if (d.x != 0.0 || d.y != 0.0) edges.push_back({a.id, b.id, planar_predicate(d, config.sector_offset_deg)});

      if (!a.depth_m || !b.depth_m) continue;
      if (a.mask.height() != b.mask.height() || a.mask.width() != b.mask.width()) continue;
      const std::size_t area = a.mask.area();
      if (area == 0) continue;
      const double overlap = static_cast<double>(intersection_area(a.mask, b.mask)) / static_cast<double>(area);
      if (overlap >= config.on_overlap_fraction && *b.depth_m - *a.depth_m >= config.on_depth_margin_m - 1e-12)
        edges.push_back({a.id, b.id, Predicate::On});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<LocationLabel> resolve_absolute_locations(const SceneGraph& scene) {
  std::map<std::string, std::vector<const ObjectNode*>> groups;
  std::vector<const ObjectNode*> all;
  for (const auto& o : scene.objects) {
    groups[o.category].push_back(&o);
    all.push_back(&o);
  }
  std::vector<LocationLabel> labels;
  for (const auto& [category, group] : groups) label_group(scene, group, category, labels);
  label_group(scene, all, std::string(kAllObjectsScope), labels);
  std::sort(labels.begin(), labels.end());
  return labels;
}

std::set<std::string> ambiguous_categories(const SceneGraph& scene) {
  std::map<std::string, int> counts;
  for (const auto& o : scene.objects) ++counts[o.category];
  std::set<std::string> out;
  for (const auto& [category, n] : counts)
    if (n >= 2) out.insert(category);
  return out;
}

std::vector<Attribute> distinguishing_attributes(const SceneGraph& scene, int target_id) {
  const ObjectNode& target = scene.get(target_id);
  std::vector<Attribute> out;
  for (const Attribute& attr : target.attributes()) {
    bool unique = true;
    for (const auto& rival : scene.objects) {
      if (rival.id == target.id || rival.category != target.category) continue;
      if (rival.attribute(attr.kind) == attr.value) {
        unique = false;
        break;
      }
    }
    if (unique) out.push_back(attr);
  }
  return out;
}

void resolve_derived(SceneGraph& scene, const RelationConfig& config) {
  scene.relations = resolve_pairwise_relations(scene, config);
  scene.locations = resolve_absolute_locations(scene);
}

void validate_scene(const SceneGraph& scene) {
  if (scene.height <= 0 || scene.width <= 0) throw SceneError("scene '" + scene.scene_id + "': image size must be positive");
  std::unordered_set<int> ids;
  for (const auto& o : scene.objects) {
    if (!ids.insert(o.id).second) throw SceneError(object_context(scene, o.id) + ": duplicate id");
    if (o.mask.height() != scene.height || o.mask.width() != scene.width)
      throw SceneError(object_context(scene, o.id) + ": mask size differs from the image size");
    const auto tight = o.mask.bbox();
    if (!tight) throw SceneError(object_context(scene, o.id) + ": empty mask");
    if (!(*tight == o.bbox)) throw SceneError(object_context(scene, o.id) + ": bbox is not the tight mask bounding box");
    if (o.category.empty()) throw SceneError(object_context(scene, o.id) + ": empty category");
    for (const auto& g : o.grasps)
      if (!point_in_image(g.center(), scene.height, scene.width))
        throw SceneError(object_context(scene, o.id) + ": grasp center outside the image");
  }
  for (const auto& e : scene.relations)
    if (!ids.count(e.subject_id) || !ids.count(e.object_id))
      throw SceneError("scene '" + scene.scene_id + "': relation references a missing object");
  for (const auto& l : scene.locations)
    if (!ids.count(l.object_id)) throw SceneError("scene '" + scene.scene_id + "': location references a missing object");
}

double quantize6(double value) {
  const double q = std::round(value * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;  // no negative zero
}

void quantize_scene(SceneGraph& scene) {
  for (auto& o : scene.objects) {
    if (o.centroid) o.centroid = Point2d{quantize6(o.centroid->x), quantize6(o.centroid->y)};
    if (o.depth_m) o.depth_m = quantize6(*o.depth_m);
    for (auto& g : o.grasps) {
      g = GraspRectangle({quantize6(g.center().x), quantize6(g.center().y)}, quantize6(g.angle()), quantize6(g.width()),
                         quantize6(g.height()));
    }
  }
}

std::optional<double> mean_valid_depth(const Mask& mask, const GrayImage& depth, double metres_per_unit) {
  if (mask.height() != depth.height || mask.width() != depth.width)
    throw std::invalid_argument("depth image size differs from the mask size");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const std::uint16_t v = depth.at(x, y);
      if (v == 0) continue;
      sum += v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n) * metres_per_unit;
}

}  // namespace refgrasp
