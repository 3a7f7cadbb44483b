#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgrasp/dataset.hpp"
#include "refgrasp/metrics.hpp"
#include "refgrasp/refexp.hpp"
#include "refgrasp/scene.hpp"

namespace refgrasp {

/// Placement failed within the retry budget; the config is too dense.
class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthObjectType {
  std::string category;
  std::string instance_name;
  std::optional<std::string> color;
  std::optional<std::string> instance_attribute;
};

/// Vocabulary matching the default catalog; several categories have more
/// than one instance so ambiguous scenes occur.
const std::vector<SynthObjectType>& default_synth_vocabulary();

struct SynthConfig {
  int min_objects = 3;
  int max_objects = 8;
  int height = 240;
  int width = 320;
  int min_size = 28;  // object box side, px
  int max_size = 64;
  int min_separation = 6;       // px between object boxes
  int min_grasps = 1;
  int max_grasps = 3;
  double min_grasp_separation = 14.0;  // px between grasp centres in a scene
  double ellipse_probability = 0.5;
  double repeat_category_probability = 0.5;  // reuse a category already placed
  double max_width = kDefaultMaxWidth;
  int max_attempts = 400;
  std::vector<SynthObjectType> vocabulary = default_synth_vocabulary();
  RelationConfig relation_config;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Non-overlapping box/ellipse objects with grasps whose painted map regions
/// never touch. Deterministic in (config, seed). Relations are resolved.
SceneGraph generate_synthetic_scene(const SynthConfig& config, std::uint64_t seed, const std::string& scene_id = "synth");

struct SynthDatasetConfig {
  std::size_t scenes = 50;
  SynthConfig scene;
  GenerationConfig generation;  // generation.seed also seeds scenes and splits
  std::vector<Family> families = {kAllFamilies.begin(), kAllFamilies.end()};
  SplitFractions splits;
};

Dataset generate_synthetic_dataset(const SynthDatasetConfig& config, unsigned threads = 1);

struct NoiseSpec {
  int erosion_radius = 0;
  int dilation_radius = 0;
  double center_jitter_px = 0.0;    // uniform in [-j, j] per axis
  double angle_jitter_rad = 0.0;    // uniform in [-j, j]
  double angle_offset_rad = 0.0;    // added to every angle
  double width_scale_jitter = 0.0;  // width and height scaled by 1 + U[-j, j]
  double substitution_probability = 0.0;

  void validate() const;  // throws std::invalid_argument
};

/// Ground-truth lookup for the tuple's target, then corruption. With
/// substitution a same-category rival (if any) stands in for the target.
Prediction oracle_predict(const SceneGraph& scene, const ReferringExpression& tuple, const NoiseSpec& noise,
                          std::uint64_t seed);

/// oracle_predict for every tuple of the dataset, in tuple order.
std::vector<Prediction> oracle_predictions(const Dataset& dataset, const NoiseSpec& noise, std::uint64_t seed,
                                           unsigned threads = 1);

}  // namespace refgrasp
