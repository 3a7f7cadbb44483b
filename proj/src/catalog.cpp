#include "refgrasp/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace refgrasp {

namespace {

using Json = nlohmann::json;
using PhraseTable = std::map<std::string, std::vector<std::string>>;

constexpr std::array<std::string_view, 5> kFamilyNames = {"name", "attribute", "relation", "location", "mixed"};
constexpr std::array<std::string_view, 8> kSlotNames = {"prefix", "obj1", "att1", "loc1", "rel", "obj2", "att2", "loc2"};
constexpr std::array<std::string_view, 6> kConceptTypeNames = {"categories", "instances", "colors",
                                                               "instance_attributes", "relations", "locations"};

struct TemplateSpec {
  Family family;
  const char* skeleton;
};

// Sub-template grammar. Every skeleton fills the slot structure
// [prefix] ([loc1] [att1]) [obj1] ((that is) [rel] the ([loc2] [att2]) [obj2]).
const std::vector<TemplateSpec>& builtin_templates() {
  static const std::vector<TemplateSpec> specs = {
      // name: instance-level object concept only
      {Family::Name, "{prefix} {obj1}"},
      {Family::Name, "{prefix} {obj1} object"},
      {Family::Name, "{prefix} {obj1} item"},
      {Family::Name, "{prefix} {obj1} in the scene"},
      {Family::Name, "{prefix} {obj1} on the table"},
      {Family::Name, "{prefix} {obj1} you can see"},
      {Family::Name, "{prefix} {obj1} from the table"},
      {Family::Name, "{prefix} {obj1} over there"},
      // attribute
      {Family::Attribute, "{prefix} {att1} {obj1}"},
      {Family::Attribute, "{prefix} {obj1} that is {att1}"},
      {Family::Attribute, "{prefix} {obj1} which is {att1}"},
      {Family::Attribute, "{prefix} {att1:color} colored {obj1}"},
      {Family::Attribute, "{prefix} {obj1} in {att1:color} color"},
      {Family::Attribute, "{prefix} {obj1} of {att1:color} color"},
      {Family::Attribute, "{prefix} {obj1} of the {att1:instance_attribute} kind"},
      {Family::Attribute, "{prefix} {obj1} of the {att1:instance_attribute} variety"},
      // relation: undecorated target and anchor
      {Family::Relation, "{prefix} {obj1} {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that is {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} which is {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} located {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} placed {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} positioned {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} lying {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} sitting {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} standing {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} found {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that you see {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that is located {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that is placed {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that is positioned {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that is lying {rel} the {obj2}"},
      {Family::Relation, "{prefix} {obj1} that is sitting {rel} the {obj2}"},
      // location
      {Family::Location, "{prefix} {loc1} {obj1}"},
      {Family::Location, "{prefix} {loc1} {obj1} in the scene"},
      {Family::Location, "{prefix} {loc1} {obj1} on the table"},
      {Family::Location, "{prefix} {loc1} {obj1} you can see"},
      {Family::Location, "{prefix} {loc1} {obj1} of all"},
      {Family::Location, "{prefix} {loc1} {obj1} among them"},
      {Family::Location, "{prefix} {obj1} that is the {loc1} one"},
      {Family::Location, "{prefix} {obj1} which is the {loc1} one"},
      // mixed: two or more concept kinds combined
      {Family::Mixed, "{prefix} {loc1} {att1} {obj1}"},
      {Family::Mixed, "{prefix} {att1} {obj1} that is the {loc1} one"},
      {Family::Mixed, "{prefix} {att1} {obj1} {rel} the {obj2}"},
      {Family::Mixed, "{prefix} {att1} {obj1} that is {rel} the {obj2}"},
      {Family::Mixed, "{prefix} {loc1} {obj1} {rel} the {obj2}"},
      {Family::Mixed, "{prefix} {loc1} {obj1} that is {rel} the {obj2}"},
      {Family::Mixed, "{prefix} {obj1} {rel} the {att2} {obj2}"},
      {Family::Mixed, "{prefix} {obj1} that is {rel} the {att2} {obj2}"},
      {Family::Mixed, "{prefix} {obj1} {rel} the {loc2} {obj2}"},
      {Family::Mixed, "{prefix} {obj1} that is {rel} the {loc2} {obj2}"},
      {Family::Mixed, "{prefix} {obj1} {rel} the {loc2} {att2} {obj2}"},
      {Family::Mixed, "{prefix} {obj1} that is {rel} the {loc2} {att2} {obj2}"},
      {Family::Mixed, "{prefix} {att1} {obj1} {rel} the {att2} {obj2}"},
      {Family::Mixed, "{prefix} {att1} {obj1} that is {rel} the {att2} {obj2}"},
      {Family::Mixed, "{prefix} {att1} {obj1} {rel} the {loc2} {obj2}"},
      {Family::Mixed, "{prefix} {att1} {obj1} that is {rel} the {loc2} {obj2}"},
  };
  return specs;
}

Lexicon builtin_lexicon() {
  Lexicon lx;
  lx.prefixes = {"pick the",  "pick up the", "grasp the", "grab the",    "take the",
                 "get the",   "fetch the",   "give me the", "hand me the", "lift the"};
  lx.categories = {
      {"apple", {"apple"}},
      {"banana", {"banana"}},
      {"bowl", {"bowl", "dish"}},
      {"cereal box", {"cereal box", "cereal box package", "box of cereal"}},
      {"flashlight", {"flashlight", "torch"}},
      {"marker", {"marker", "marker pen"}},
      {"mug", {"mug", "cup"}},
      {"soda can", {"soda can", "can of soda", "drink can"}},
      {"tissue box", {"tissue box", "box of tissues"}},
  };
  lx.instances = {
      {"banana", {"banana"}},
      {"ceramic bowl", {"ceramic bowl"}},
      {"chocolate corn flakes", {"chocolate corn flakes", "choco flakes"}},
      {"coca-cola can", {"coca-cola can", "coke can", "coke"}},
      {"coffee mug", {"coffee mug", "coffee cup"}},
      {"corn flakes", {"corn flakes", "corn flakes cereal"}},
      {"fanta can", {"fanta can", "fanta"}},
      {"flashlight", {"flashlight", "torch"}},
      {"gala apple", {"gala apple"}},
      {"golden apple", {"golden apple", "golden delicious"}},
      {"granny smith apple", {"granny smith apple", "granny smith"}},
      {"honey loops", {"honey loops", "honey loops cereal"}},
      {"kleenex box", {"kleenex box", "kleenex tissues", "kleenex"}},
      {"muesli", {"muesli", "fruit muesli"}},
      {"permanent marker", {"permanent marker", "sharpie"}},
      {"plastic bowl", {"plastic bowl"}},
      {"sprite can", {"sprite can", "sprite"}},
      {"tempo tissues", {"tempo tissues", "tempo box"}},
      {"travel mug", {"travel mug"}},
      {"whiteboard marker", {"whiteboard marker"}},
      {"wooden bowl", {"wooden bowl"}},
  };
  for (const char* c : {"black", "blue", "brown", "green", "orange", "red", "white", "yellow"}) lx.colors[c] = {c};
  for (const char* a : {"ceramic", "chocolate", "coca-cola", "coffee", "fanta", "fruit", "gala", "golden",
                        "granny smith", "honey", "kleenex", "original", "permanent", "plastic", "sprite", "tempo",
                        "travel", "whiteboard", "wooden"})
    lx.instance_attributes[a] = {a};
  lx.relations = {
      {"right", {"right of", "to the right of", "on the right side of"}},
      {"rear right", {"to the rear right of", "behind and right of", "behind and to the right of"}},
      {"behind", {"behind", "in back of", "at the back of"}},
      {"rear left", {"to the rear left of", "behind and left of", "behind and to the left of"}},
      {"left", {"left of", "to the left of", "on the left side of"}},
      {"front left", {"to the front left of", "in front and left of"}},
      {"front", {"in front of", "at the front of"}},
      {"front right", {"to the front right of", "in front and right of"}},
      {"on", {"on", "on top of", "resting on"}},
  };
  lx.locations = {
      {"leftmost", {"leftmost", "left"}},
      {"rightmost", {"rightmost", "right"}},
      {"furthest", {"furthest", "farthest"}},
      {"closest", {"closest", "nearest"}},
  };
  return lx;
}

void check_template(const SubTemplate& t) {
  std::set<Slot> slots;
  for (const auto& tok : t.tokens) {
    if (!tok.is_slot) continue;
    if (!slots.insert(tok.slot).second)
      throw CatalogError("template " + std::to_string(t.id) + ": slot {" + std::string(to_string(tok.slot)) +
                         "} used twice");
  }
  const auto has = [&](Slot s) { return slots.count(s) > 0; };
  const auto fail = [&](const std::string& why) {
    throw CatalogError("template " + std::to_string(t.id) + " (" + std::string(to_string(t.family)) + ", \"" +
                       t.skeleton + "\"): " + why);
  };
  if (!has(Slot::Prefix) || !has(Slot::Obj1)) fail("needs {prefix} and {obj1}");
  if (t.tokens.empty() || !t.tokens.front().is_slot || t.tokens.front().slot != Slot::Prefix)
    fail("must start with {prefix}");
  const bool anchor = has(Slot::Obj2);
  if (anchor != has(Slot::Rel)) fail("{rel} and {obj2} go together");
  if (!anchor && (has(Slot::Att2) || has(Slot::Loc2))) fail("anchor attributes need {obj2}");
  const bool att1 = has(Slot::Att1), loc1 = has(Slot::Loc1), att2 = has(Slot::Att2), loc2 = has(Slot::Loc2);
  switch (t.family) {
    case Family::Name:
      if (att1 || loc1 || anchor) fail("name templates take only {obj1}");
      break;
    case Family::Attribute:
      if (!att1 || loc1 || anchor) fail("attribute templates take {att1} only");
      break;
    case Family::Location:
      if (!loc1 || att1 || anchor) fail("location templates take {loc1} only");
      break;
    case Family::Relation:
      if (!anchor || att1 || loc1 || att2 || loc2) fail("relation templates take an undecorated target and anchor");
      break;
    case Family::Mixed:
      if (anchor ? !(att1 || loc1 || att2 || loc2) : !(att1 && loc1))
        fail("mixed templates combine at least two concept kinds");
      break;
  }
}

PhraseTable table_from_json(const Json& j, const std::string& what) {
  PhraseTable out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw CatalogError("lexicon." + what + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array() || value.empty()) throw CatalogError("lexicon." + what + "." + key + " needs a phrase list");
    std::vector<std::string> phrases;
    for (const auto& p : value) {
      if (!p.is_string()) throw CatalogError("lexicon." + what + "." + key + ": phrases must be strings");
      phrases.push_back(normalize_text(p.get<std::string>()));
    }
    out[key] = std::move(phrases);
  }
  return out;
}

}  // namespace

std::string_view to_string(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

std::optional<Family> parse_family(std::string_view text) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
    if (kFamilyNames[i] == text) return static_cast<Family>(i);
  return std::nullopt;
}

std::string_view to_string(Slot s) { return kSlotNames[static_cast<std::size_t>(s)]; }

std::string_view to_string(ConceptType t) { return kConceptTypeNames[static_cast<std::size_t>(t)]; }

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::vector<SkeletonToken> parse_skeleton(std::string_view skeleton) {
  std::vector<SkeletonToken> tokens;
  for (const std::string& word : split_words(skeleton)) {
    if (word.size() >= 2 && word.front() == '{' && word.back() == '}') {
      std::string body = word.substr(1, word.size() - 2);
      std::optional<AttributeKind> kind;
      if (const auto colon = body.find(':'); colon != std::string::npos) {
        kind = parse_attribute_kind(body.substr(colon + 1));
        if (!kind) throw CatalogError("unknown attribute kind in slot " + word);
        body = body.substr(0, colon);
      }
      const auto it = std::find(kSlotNames.begin(), kSlotNames.end(), body);
      if (it == kSlotNames.end()) throw CatalogError("unknown slot " + word);
      const Slot slot = static_cast<Slot>(it - kSlotNames.begin());
      if (kind && slot != Slot::Att1 && slot != Slot::Att2) throw CatalogError("only attribute slots take a kind: " + word);
      tokens.push_back({true, slot, kind, {}});
    } else {
      if (word.find('{') != std::string::npos || word.find('}') != std::string::npos)
        throw CatalogError("malformed slot token: " + word);
      tokens.push_back({false, Slot::Prefix, std::nullopt, normalize_text(word)});
    }
  }
  return tokens;
}

bool SubTemplate::has(Slot s) const {
  return std::any_of(tokens.begin(), tokens.end(), [s](const SkeletonToken& t) { return t.is_slot && t.slot == s; });
}

std::optional<AttributeKind> SubTemplate::attribute_kind(Slot s) const {
  for (const auto& t : tokens)
    if (t.is_slot && t.slot == s) return t.attribute_kind;
  return std::nullopt;
}

const PhraseTable& Lexicon::table(ConceptType type) const {
  switch (type) {
    case ConceptType::Category: return categories;
    case ConceptType::Instance: return instances;
    case ConceptType::Color: return colors;
    case ConceptType::InstanceAttribute: return instance_attributes;
    case ConceptType::Relation: return relations;
    case ConceptType::Location: return locations;
  }
  throw std::logic_error("bad concept type");
}

PhraseTable& Lexicon::table(ConceptType type) {
  return const_cast<PhraseTable&>(static_cast<const Lexicon&>(*this).table(type));
}

const std::vector<std::string>& Lexicon::phrases(ConceptType type, const std::string& key) const {
  const auto& t = table(type);
  const auto it = t.find(key);
  if (it == t.end() || it->second.empty())
    throw LexiconGapError("lexicon has no " + std::string(to_string(type)) + " entry for '" + key + "'");
  return it->second;
}

const SubTemplate& Catalog::template_by_id(int id) const {
  for (const auto& t : templates)
    if (t.id == id) return t;
  throw CatalogError("unknown sub-template id " + std::to_string(id));
}

std::vector<const SubTemplate*> Catalog::family_templates(Family family) const {
  std::vector<const SubTemplate*> out;
  for (const auto& t : templates)
    if (t.family == family) out.push_back(&t);
  return out;
}

Catalog default_catalog() {
  Catalog catalog;
  catalog.lexicon = builtin_lexicon();
  int id = 0;
  for (const auto& spec : builtin_templates()) {
    SubTemplate t{id++, spec.family, spec.skeleton, parse_skeleton(spec.skeleton)};
    check_template(t);
    catalog.templates.push_back(std::move(t));
  }
  return catalog;
}

nlohmann::json catalog_to_json(const Catalog& catalog) {
  Json templates = Json::object();
  for (Family f : kAllFamilies) {
    Json list = Json::array();
    for (const SubTemplate* t : catalog.family_templates(f)) list.push_back({{"id", t->id}, {"skeleton", t->skeleton}});
    templates[std::string(to_string(f))] = std::move(list);
  }
  Json lexicon = Json::object();
  lexicon["prefixes"] = catalog.lexicon.prefixes;
  for (ConceptType type : kAllConceptTypes) lexicon[std::string(to_string(type))] = catalog.lexicon.table(type);
  return Json{{"templates", templates}, {"lexicon", lexicon}};
}

Catalog catalog_from_json(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("templates") || !json.contains("lexicon"))
    throw CatalogError("catalog needs 'templates' and 'lexicon' objects");
  Catalog catalog;
  const Json& lx = json.at("lexicon");
  if (!lx.contains("prefixes") || !lx.at("prefixes").is_array() || lx.at("prefixes").empty())
    throw CatalogError("lexicon.prefixes must be a non-empty list");
  for (const auto& p : lx.at("prefixes")) catalog.lexicon.prefixes.push_back(normalize_text(p.get<std::string>()));
  for (ConceptType type : kAllConceptTypes) {
    const std::string key(to_string(type));
    catalog.lexicon.table(type) = table_from_json(lx.contains(key) ? lx.at(key) : Json(), key);
  }
  for (const auto& [name, _] : catalog.lexicon.relations)
    if (!parse_predicate(name)) throw CatalogError("lexicon.relations: unknown predicate '" + name + "'");
  for (const auto& [name, _] : catalog.lexicon.locations)
    if (!parse_location(name)) throw CatalogError("lexicon.locations: unknown location '" + name + "'");

  std::set<int> ids;
  for (const auto& [family_name, list] : json.at("templates").items()) {
    const auto family = parse_family(family_name);
    if (!family) throw CatalogError("unknown template family '" + family_name + "'");
    for (const auto& entry : list) {
      SubTemplate t;
      t.id = entry.at("id").get<int>();
      t.family = *family;
      t.skeleton = entry.at("skeleton").get<std::string>();
      t.tokens = parse_skeleton(t.skeleton);
      check_template(t);
      if (!ids.insert(t.id).second) throw CatalogError("duplicate sub-template id " + std::to_string(t.id));
      catalog.templates.push_back(std::move(t));
    }
  }
  std::sort(catalog.templates.begin(), catalog.templates.end(),
            [](const SubTemplate& a, const SubTemplate& b) { return a.id < b.id; });
  return catalog;
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open catalog: " + path.string());
  try {
    return catalog_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw CatalogError(path.string() + ": " + e.what());
  }
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CatalogError("cannot write catalog: " + path.string());
  out << catalog_to_json(catalog).dump(2) << '\n';
}

void augment_lexicon(Lexicon& lexicon, const std::vector<const SceneGraph*>& scenes) {
  const auto ensure = [](PhraseTable& table, const std::string& key) {
    auto& phrases = table[key];
    if (phrases.empty()) phrases.push_back(normalize_text(key));
  };
  for (const SceneGraph* scene : scenes) {
    for (const auto& o : scene->objects) {
      ensure(lexicon.categories, o.category);
      ensure(lexicon.instances, o.instance_name);
      auto& names = lexicon.instances[o.instance_name];
      for (const auto& syn : o.name_synonyms) {
        const std::string s = normalize_text(syn);
        if (!s.empty() && std::find(names.begin(), names.end(), s) == names.end()) names.push_back(s);
      }
      if (o.color) ensure(lexicon.colors, *o.color);
      if (o.instance_attribute) ensure(lexicon.instance_attributes, *o.instance_attribute);
    }
  }
  for (int p = 0; p <= static_cast<int>(Predicate::On); ++p) ensure(lexicon.relations, std::string(to_string(static_cast<Predicate>(p))));
  for (int l = 0; l <= static_cast<int>(Location::Closest); ++l) ensure(lexicon.locations, std::string(to_string(static_cast<Location>(l))));
}

}  // namespace refgrasp
