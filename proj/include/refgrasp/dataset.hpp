#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "refgrasp/catalog.hpp"
#include "refgrasp/grasp.hpp"
#include "refgrasp/refexp.hpp"
#include "refgrasp/scene.hpp"

namespace refgrasp {

/// Load/write failures; the message names the offending scene, tuple or file.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corner-file parse failure with a 1-based line number.
class GraspParseError : public DatasetError {
 public:
  GraspParseError(int line, const std::string& what)
      : DatasetError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline constexpr std::string_view kDatasetFormat = "refgrasp-dataset/1";

struct Dataset {
  std::string name = "refgrasp";
  std::string version = "1";
  std::map<std::string, SceneGraph> scenes;  // split lives in SceneGraph::split
  std::vector<ReferringExpression> tuples;   // sorted by scene id, then tuple index
  Catalog catalog;
  RelationConfig relation_config;

  std::map<std::string, Split> splits() const;
  const SceneGraph& scene(const std::string& id) const;  // throws DatasetError
  const ObjectNode& target(const ReferringExpression& e) const;
};

/// Sorts tuples by (scene id, numeric index in the tuple id).
void sort_tuples(std::vector<ReferringExpression>& tuples);

void write_dataset(const Dataset& dataset, const std::filesystem::path& root);
Dataset load_dataset(const std::filesystem::path& root, unsigned threads = 1);

/// Tuple checks against the dataset's own scenes and catalog.
ValidationReport validate_tuples(const Dataset& dataset);

/// Cornell-style corner file: four "x y" lines per rectangle, the first edge
/// along the grasp axis. Blank lines are ignored.
std::vector<GraspRectangle> import_corner_grasps(std::string_view text);

/// Reads an OCID-like tree: one directory per scene with label.png (instance
/// ids), objects.json, optional depth.png (mm) and grasps.txt, and an optional
/// top-level splits.json. Relations and locations are resolved.
struct ImportOptions {
  double depth_scale_m = 0.001;  // metres per depth unit
  RelationConfig relation_config;
};
Dataset import_ocid_like(const std::filesystem::path& root, const ImportOptions& options = {});

/// True when `root` looks like a canonical dataset (has a manifest).
bool is_dataset_root(const std::filesystem::path& root);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Seeded assignment by scene; split sizes are rounded from the fractions.
void assign_splits(std::map<std::string, SceneGraph>& scenes, std::uint64_t seed, const SplitFractions& fractions = {});

struct ConceptCount {
  std::size_t unique = 0;
  std::size_t total = 0;
  friend bool operator==(const ConceptCount&, const ConceptCount&) = default;
};

struct StatsReport {
  std::size_t scenes = 0;
  std::size_t objects = 0;
  std::size_t categories = 0;  // distinct object categories across scenes
  std::size_t instances = 0;   // distinct instance names across scenes
  std::size_t tuples = 0;
  std::map<Split, std::size_t> scenes_per_split;
  std::map<Split, std::map<Family, std::size_t>> family_counts;  // tuples per split and family
  std::map<ConceptType, ConceptCount> concepts;                  // concepts mentioned by expressions

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

StatsReport compute_stats(const Dataset& dataset);

nlohmann::json stats_to_json(const StatsReport& stats);
std::string format_stats_table(const StatsReport& stats);

// JSON helpers shared by the tools and bindings.
nlohmann::json grasp_to_json(const GraspRectangle& g);
GraspRectangle grasp_from_json(const nlohmann::json& j);
nlohmann::json program_to_json(const RefProgram& p);
RefProgram program_from_json(const nlohmann::json& j);

}  // namespace refgrasp
