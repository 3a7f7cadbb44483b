#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgrasp/catalog.hpp"
#include "refgrasp/rng.hpp"
#include "refgrasp/scene.hpp"

namespace refgrasp {

/// Anchor filter matched more or fewer than one object.
class AmbiguousAnchorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested family cannot refer to the target uniquely.
class NoValidProgram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectFilter {
  std::string category;
  std::optional<std::string> instance_name;  // name family only
  std::optional<Attribute> attribute;
  std::optional<Location> location;  // label scoped over `category`

  friend bool operator==(const ObjectFilter&, const ObjectFilter&) = default;
};

struct AnchorClause {
  Predicate relation = Predicate::Right;  // target <relation> anchor
  ObjectFilter filter;

  friend bool operator==(const AnchorClause&, const AnchorClause&) = default;
};

struct RefProgram {
  ObjectFilter target;
  std::optional<AnchorClause> anchor;
  Family family = Family::Name;
  int sub_template_id = 0;

  friend bool operator==(const RefProgram&, const RefProgram&) = default;
};

struct ReferringExpression {
  std::string tuple_id;  // "<scene_id>#<index>"
  std::string scene_id;
  int target_id = 0;
  std::string text;
  std::string prefix;
  RefProgram program;

  friend bool operator==(const ReferringExpression&, const ReferringExpression&) = default;
};

struct GenerationConfig {
  std::map<Family, int> quotas = {
      {Family::Name, 1}, {Family::Attribute, 1}, {Family::Relation, 2}, {Family::Location, 1}, {Family::Mixed, 2}};
  std::size_t max_per_scene = 0;  // 0 means unlimited
  std::size_t max_tokens = 20;
  std::uint64_t seed = kDefaultSeed;
};

/// Objects passing the filter, in scene order.
std::vector<int> filter_objects(const ObjectFilter& filter, const SceneGraph& scene);

/// Ids denoted by the program. Throws AmbiguousAnchorError when the anchor
/// filter does not resolve to exactly one object.
std::set<int> execute_program(const RefProgram& program, const SceneGraph& scene);

/// Every program of the given sub-template that denotes exactly the target,
/// in a deterministic order.
std::vector<RefProgram> candidate_programs(const SceneGraph& scene, int target_id, const SubTemplate& tmpl);

/// Picks a sub-template uniformly among those of the family that admit a
/// program, then one of its programs uniformly. Throws NoValidProgram.
RefProgram build_program(const SceneGraph& scene, int target_id, Family family, const Catalog& catalog, Rng& rng);

struct RealizedText {
  std::string text;
  std::string prefix;
};

/// Fills the program's skeleton left to right with sampled paraphrases.
/// Throws LexiconGapError for concepts the lexicon lacks.
RealizedText realize_text(const RefProgram& program, const Catalog& catalog, Rng& rng);

/// True when `text` is a realization of `program` under the catalog.
bool text_realizes_program(const std::string& text, const RefProgram& program, const Catalog& catalog);

/// Ids of the sub-templates whose skeleton matches `text` with any lexicon
/// phrases in the slots.
std::vector<int> matching_templates(const std::string& text, const Catalog& catalog);

std::vector<ReferringExpression> generate_for_scene(const SceneGraph& scene, const Catalog& catalog,
                                                    const GenerationConfig& config,
                                                    const std::vector<Family>& families = {kAllFamilies.begin(),
                                                                                           kAllFamilies.end()});

/// Runs generate_for_scene over all scenes in parallel. Output is sorted by
/// scene id, then tuple index, regardless of thread count.
std::vector<ReferringExpression> generate_expressions(const std::vector<const SceneGraph*>& scenes,
                                                      const Catalog& catalog, const GenerationConfig& config,
                                                      const std::vector<Family>& families, unsigned threads = 1);

struct Violation {
  std::string tuple_id;
  std::string kind;  // missing_scene, missing_target, structure, not_unique, anchor_error, ambiguity, text_mismatch, duplicate
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::size_t tuples_checked = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks structure against the sub-template's slots. Empty string when fine.
std::string program_structure_error(const RefProgram& program, const Catalog& catalog);

ValidationReport validate_tuples(const std::map<std::string, SceneGraph>& scenes,
                                 const std::vector<ReferringExpression>& tuples, const Catalog& catalog);

}  // namespace refgrasp
