#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "refgrasp/scene.hpp"

namespace refgrasp {

enum class Family : int { Name, Attribute, Relation, Location, Mixed };

inline constexpr std::array<Family, 5> kAllFamilies = {Family::Name, Family::Attribute, Family::Relation,
                                                       Family::Location, Family::Mixed};

std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view text);

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when realization needs a phrase the lexicon does not have.
class LexiconGapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Slot : int { Prefix, Obj1, Att1, Loc1, Rel, Obj2, Att2, Loc2 };

std::string_view to_string(Slot s);

struct SkeletonToken {
  bool is_slot = false;
  Slot slot = Slot::Prefix;
  std::optional<AttributeKind> attribute_kind;  // only for {att1:color} style slots
  std::string word;                             // literal token otherwise
};

/// One concrete sentence skeleton, e.g. "{prefix} {loc1} {obj1}".
struct SubTemplate {
  int id = 0;
  Family family = Family::Name;
  std::string skeleton;
  std::vector<SkeletonToken> tokens;

  bool has(Slot s) const;
  std::optional<AttributeKind> attribute_kind(Slot s) const;
};

std::vector<SkeletonToken> parse_skeleton(std::string_view skeleton);

enum class ConceptType : int { Category, Instance, Color, InstanceAttribute, Relation, Location };

inline constexpr std::array<ConceptType, 6> kAllConceptTypes = {ConceptType::Category, ConceptType::Instance,
                                                                ConceptType::Color, ConceptType::InstanceAttribute,
                                                                ConceptType::Relation, ConceptType::Location};

std::string_view to_string(ConceptType t);

/// Concept -> paraphrase lists. Keys are the canonical concept names used in
/// scene graphs; the first phrase of each list is the canonical surface form.
struct Lexicon {
  std::vector<std::string> prefixes;
  std::map<std::string, std::vector<std::string>> categories;
  std::map<std::string, std::vector<std::string>> instances;
  std::map<std::string, std::vector<std::string>> colors;
  std::map<std::string, std::vector<std::string>> instance_attributes;
  std::map<std::string, std::vector<std::string>> relations;  // keyed by predicate name
  std::map<std::string, std::vector<std::string>> locations;  // keyed by location name

  const std::map<std::string, std::vector<std::string>>& table(ConceptType type) const;
  std::map<std::string, std::vector<std::string>>& table(ConceptType type);

  /// Throws LexiconGapError when the concept has no phrases.
  const std::vector<std::string>& phrases(ConceptType type, const std::string& key) const;
};

struct Catalog {
  Lexicon lexicon;
  std::vector<SubTemplate> templates;

  const SubTemplate& template_by_id(int id) const;  // throws CatalogError
  std::vector<const SubTemplate*> family_templates(Family family) const;
};

/// Built-in grammar: 56 sub-templates (name 8, attribute 8, relation 16,
/// location 8, mixed 16) and a lexicon covering the synthetic vocabulary.
Catalog default_catalog();

nlohmann::json catalog_to_json(const Catalog& catalog);
Catalog catalog_from_json(const nlohmann::json& json);
Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

/// Adds an identity entry for every concept in the scenes that the lexicon
/// lacks, plus per-object name synonyms.
void augment_lexicon(Lexicon& lexicon, const std::vector<const SceneGraph*>& scenes);

/// Lowercases and collapses whitespace runs to single spaces.
std::string normalize_text(std::string_view text);
std::vector<std::string> split_words(std::string_view text);

}  // namespace refgrasp
