#pragma once

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "refgrasp/grasp.hpp"
#include "refgrasp/mask.hpp"

namespace refgrasp {

/// Raised for scenes that violate the scene-graph invariants.
class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Planar predicates are listed counterclockwise as seen on screen, starting
// from "right"; the enum value is the sector index.
enum class Predicate : int { Right, RearRight, Behind, RearLeft, Left, FrontLeft, Front, FrontRight, On };

inline constexpr int kPlanarPredicateCount = 8;

std::string_view to_string(Predicate p);
std::optional<Predicate> parse_predicate(std::string_view text);
bool is_planar(Predicate p);
/// Swaps left/right and front/behind. Throws std::invalid_argument for On.
Predicate inverse(Predicate p);

enum class Location : int { Leftmost, Rightmost, Furthest, Closest };

std::string_view to_string(Location l);
std::optional<Location> parse_location(std::string_view text);

enum class AttributeKind : int { Color, Instance };

std::string_view to_string(AttributeKind k);
std::optional<AttributeKind> parse_attribute_kind(std::string_view text);

struct Attribute {
  AttributeKind kind = AttributeKind::Color;
  std::string value;

  friend auto operator<=>(const Attribute&, const Attribute&) = default;
};

enum class Split : int { Train, Val, Test };

inline constexpr std::array<Split, 3> kAllSplits = {Split::Train, Split::Val, Split::Test};

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view text);

struct ObjectNode {
  int id = 0;
  std::string category;
  std::string instance_name;
  std::vector<std::string> name_synonyms;
  std::optional<std::string> color;
  std::optional<std::string> instance_attribute;
  std::optional<Point2d> centroid;
  std::optional<double> depth_m;
  BBox bbox;
  Mask mask;
  std::vector<GraspRectangle> grasps;

  std::optional<std::string> attribute(AttributeKind kind) const {
    return kind == AttributeKind::Color ? color : instance_attribute;
  }
  std::vector<Attribute> attributes() const;

  friend bool operator==(const ObjectNode&, const ObjectNode&) = default;
};

struct RelationEdge {
  int subject_id = 0;
  int object_id = 0;
  Predicate predicate = Predicate::Right;

  friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

/// Scope of superlatives taken over every object in the scene.
inline constexpr std::string_view kAllObjectsScope = "*";

struct LocationLabel {
  int object_id = 0;
  Location label = Location::Leftmost;
  std::string scope;

  friend auto operator<=>(const LocationLabel&, const LocationLabel&) = default;
};

struct SceneGraph {
  std::string scene_id;
  int height = 0;
  int width = 0;
  std::string rgb_path;
  std::string depth_path;
  std::vector<ObjectNode> objects;
  std::vector<RelationEdge> relations;
  std::vector<LocationLabel> locations;
  Split split = Split::Train;

  const ObjectNode* find(int id) const;
  const ObjectNode& get(int id) const;  // throws SceneError

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

struct RelationConfig {
  double sector_offset_deg = 0.0;     // rotates all eight sector boundaries
  double on_overlap_fraction = 0.5;   // of the upper object's mask area
  double on_depth_margin_m = 0.01;

  friend bool operator==(const RelationConfig&, const RelationConfig&) = default;
};

/// Sector of a nonzero displacement in image coordinates. Boundary directions
/// belong to the counterclockwise (on-screen) neighbour.
Predicate planar_predicate(Point2d displacement, double sector_offset_deg = 0.0);

/// For each ordered pair (a, b), the planar predicate of a's centroid relative
/// to b's, plus (a, on, b) for stacked masks. Sorted, deterministic.
std::vector<RelationEdge> resolve_pairwise_relations(const SceneGraph& scene, const RelationConfig& config = {});

/// leftmost/rightmost/closest/furthest per category and over all objects.
std::vector<LocationLabel> resolve_absolute_locations(const SceneGraph& scene);

std::set<std::string> ambiguous_categories(const SceneGraph& scene);

/// Target attributes whose value differs from every same-category rival.
std::vector<Attribute> distinguishing_attributes(const SceneGraph& scene, int target_id);

/// Recomputes the cached relations and locations in place.
void resolve_derived(SceneGraph& scene, const RelationConfig& config = {});

/// Checks ids, masks, bboxes, grasp centres and cached-edge references.
void validate_scene(const SceneGraph& scene);

/// Rounds every stored float (centroids, depths, grasp parameters) to 6
/// decimals, the precision of the on-disk format.
void quantize_scene(SceneGraph& scene);
double quantize6(double value);

/// Mean of nonzero depth samples under the mask, scaled to metres.
std::optional<double> mean_valid_depth(const Mask& mask, const GrayImage& depth, double metres_per_unit);

}  // namespace refgrasp
