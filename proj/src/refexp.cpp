#include "refgrasp/refexp.hpp"

#include <algorithm>
#include <functional>
#include <utility>

#include "refgrasp/parallel.hpp"

namespace refgrasp {

namespace {

using WordLists = std::vector<std::vector<std::string>>;

std::map<std::string, int> category_counts(const SceneGraph& scene) {
  std::map<std::string, int> counts;
  for (const auto& o : scene.objects) ++counts[o.category];
  return counts;
}

bool has_label(const SceneGraph& scene, int id, Location label, const std::string& scope) {
  return std::any_of(scene.locations.begin(), scene.locations.end(), [&](const LocationLabel& l) {
    return l.object_id == id && l.label == label && l.scope == scope;
  });
}

bool has_edge(const SceneGraph& scene, int subject, Predicate p, int object) {
  return std::any_of(scene.relations.begin(), scene.relations.end(), [&](const RelationEdge& e) {
    return e.subject_id == subject && e.predicate == p && e.object_id == object;
  });
}

std::vector<std::optional<Attribute>> attribute_options(const ObjectNode& o, const SubTemplate& tmpl, Slot slot) {
  if (!tmpl.has(slot)) return {std::nullopt};
  const auto kind = tmpl.attribute_kind(slot);
  std::vector<std::optional<Attribute>> out;
  for (const Attribute& a : o.attributes())
    if (!kind || a.kind == *kind) out.emplace_back(a);
  return out;
}

std::vector<std::optional<Location>> location_options(const SceneGraph& scene, const ObjectNode& o,
                                                      const SubTemplate& tmpl, Slot slot) {
  if (!tmpl.has(slot)) return {std::nullopt};
  std::vector<std::optional<Location>> out;
  for (const LocationLabel& l : scene.locations)
    if (l.object_id == o.id && l.scope == o.category) out.emplace_back(l.label);
  return out;
}

bool denotes_exactly(const RefProgram& program, const SceneGraph& scene, int target_id) {
  try {
    const auto ids = execute_program(program, scene);
    return ids.size() == 1 && *ids.begin() == target_id;
  } catch (const AmbiguousAnchorError&) {
    return false;
  }
}

// Anchor filters for `anchor` that the template's obj2 slots can express.
// Decorations are used only when the anchor's category is ambiguous.
std::vector<ObjectFilter> anchor_filters(const SceneGraph& scene, const ObjectNode& anchor, const SubTemplate& tmpl,
                                         const std::map<std::string, int>& counts) {
  const bool decorated = tmpl.has(Slot::Att2) || tmpl.has(Slot::Loc2);
  const bool ambiguous = counts.at(anchor.category) >= 2;
  std::vector<ObjectFilter> out;
  if (!decorated) {
    if (!ambiguous) out.push_back({anchor.category, std::nullopt, std::nullopt, std::nullopt});
    return out;
  }
  if (!ambiguous) return out;
  for (const auto& att : attribute_options(anchor, tmpl, Slot::Att2)) {
    // With both decorations, the location must be what makes the anchor unique.
    if (att && tmpl.has(Slot::Loc2)) {
      const ObjectFilter att_only{anchor.category, std::nullopt, att, std::nullopt};
      if (filter_objects(att_only, scene).size() == 1) continue;
    }
    for (const auto& loc : location_options(scene, anchor, tmpl, Slot::Loc2)) {
      ObjectFilter f{anchor.category, std::nullopt, att, loc};
      const auto hits = filter_objects(f, scene);
      if (hits.size() == 1 && hits.front() == anchor.id) out.push_back(std::move(f));
    }
  }
  return out;
}

// Phrase lists per skeleton token, each phrase split into words.
using OptionFn = std::function<WordLists(const SkeletonToken&)>;

WordLists split_all(const std::vector<std::string>& phrases) {
  WordLists out;
  out.reserve(phrases.size());
  for (const auto& p : phrases) out.push_back(split_words(p));
  return out;
}

WordLists lookup(const Lexicon& lx, ConceptType type, const std::string& key) {
  const auto& table = lx.table(type);
  const auto it = table.find(key);
  return it == table.end() ? WordLists{} : split_all(it->second);
}

ConceptType attribute_concept(AttributeKind kind) {
  return kind == AttributeKind::Color ? ConceptType::Color : ConceptType::InstanceAttribute;
}

bool match_from(const std::vector<SkeletonToken>& tokens, const std::vector<WordLists>& options, std::size_t ti,
                const std::vector<std::string>& words, std::size_t wi) {
  if (ti == tokens.size()) return wi == words.size();
  const SkeletonToken& tok = tokens[ti];
  if (!tok.is_slot) return wi < words.size() && words[wi] == tok.word && match_from(tokens, options, ti + 1, words, wi + 1);
  for (const auto& phrase : options[ti]) {
    if (phrase.empty() || wi + phrase.size() > words.size()) continue;
    if (!std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(wi))) continue;
    if (match_from(tokens, options, ti + 1, words, wi + phrase.size())) return true;
  }
  return false;
}

bool match_template(const std::string& text, const SubTemplate& tmpl, const OptionFn& options_for) {
  std::vector<WordLists> options;
  options.reserve(tmpl.tokens.size());
  for (const auto& tok : tmpl.tokens) {
    options.push_back(tok.is_slot ? options_for(tok) : WordLists{});
    if (tok.is_slot && options.back().empty()) return false;
  }
  return match_from(tmpl.tokens, options, 0, split_words(text), 0);
}

const std::string& pick(const std::vector<std::string>& phrases, Rng& rng) {
  return phrases[uniform_index(rng, phrases.size())];
}

}  // namespace

std::vector<int> filter_objects(const ObjectFilter& filter, const SceneGraph& scene) {
  std::vector<int> out;
  for (const auto& o : scene.objects) {
    if (o.category != filter.category) continue;
    if (filter.instance_name && o.instance_name != *filter.instance_name) continue;
    if (filter.attribute && o.attribute(filter.attribute->kind) != filter.attribute->value) continue;
    if (filter.location && !has_label(scene, o.id, *filter.location, filter.category)) continue;
    out.push_back(o.id);
  }
  return out;
}

std::set<int> execute_program(const RefProgram& program, const SceneGraph& scene) {
  const auto targets = filter_objects(program.target, scene);
  if (!program.anchor) return {targets.begin(), targets.end()};
  const auto anchors = filter_objects(program.anchor->filter, scene);
  if (anchors.size() != 1)
    throw AmbiguousAnchorError("scene '" + scene.scene_id + "': anchor filter matches " +
                               std::to_string(anchors.size()) + " objects");
  std::set<int> out;
  for (int t : targets)
    if (t != anchors.front() && has_edge(scene, t, program.anchor->relation, anchors.front())) out.insert(t);
  return out;
}

std::vector<RefProgram> candidate_programs(const SceneGraph& scene, int target_id, const SubTemplate& tmpl) {
  const ObjectNode& target = scene.get(target_id);
  const auto counts = category_counts(scene);
  std::vector<RefProgram> out;
  const auto keep = [&](RefProgram p) {
    if (denotes_exactly(p, scene, target_id)) out.push_back(std::move(p));
  };

  if (tmpl.family == Family::Name) {
    if (!target.instance_name.empty())
      keep({{target.category, target.instance_name, std::nullopt, std::nullopt}, std::nullopt, tmpl.family, tmpl.id});
    return out;
  }
  if (counts.at(target.category) < 2) return out;

  for (const auto& att : attribute_options(target, tmpl, Slot::Att1)) {
    for (const auto& loc : location_options(scene, target, tmpl, Slot::Loc1)) {
      const ObjectFilter tf{target.category, std::nullopt, att, loc};
      if (!tmpl.has(Slot::Obj2)) {
        keep({tf, std::nullopt, tmpl.family, tmpl.id});
        continue;
      }
      for (const RelationEdge& e : scene.relations) {
        if (e.subject_id != target_id) continue;
        const ObjectNode& anchor = scene.get(e.object_id);
        for (auto& af : anchor_filters(scene, anchor, tmpl, counts))
          keep({tf, AnchorClause{e.predicate, std::move(af)}, tmpl.family, tmpl.id});
      }
    }
  }
  return out;
}

RefProgram build_program(const SceneGraph& scene, int target_id, Family family, const Catalog& catalog, Rng& rng) {
  std::vector<std::vector<RefProgram>> per_template;
  for (const SubTemplate* t : catalog.family_templates(family)) {
    auto programs = candidate_programs(scene, target_id, *t);
    if (!programs.empty()) per_template.push_back(std::move(programs));
  }
  if (per_template.empty())
    throw NoValidProgram("scene '" + scene.scene_id + "', object " + std::to_string(target_id) + ": no " +
                         std::string(to_string(family)) + " expression refers to it uniquely");
  auto& programs = per_template[uniform_index(rng, per_template.size())];
  return programs[uniform_index(rng, programs.size())];
}

RealizedText realize_text(const RefProgram& program, const Catalog& catalog, Rng& rng) {
  const SubTemplate& tmpl = catalog.template_by_id(program.sub_template_id);
  const Lexicon& lx = catalog.lexicon;
  const auto need = [&](bool present, Slot slot) {
    if (!present)
      throw CatalogError("program lacks a value for slot {" + std::string(to_string(slot)) + "} of sub-template " +
                         std::to_string(tmpl.id));
  };
  RealizedText out;
  std::string text;
  for (const auto& tok : tmpl.tokens) {
    std::string piece;
    if (!tok.is_slot) {
      piece = tok.word;
    } else {
      switch (tok.slot) {
        case Slot::Prefix:
          if (lx.prefixes.empty()) throw LexiconGapError("lexicon has no prefixes");
          piece = out.prefix = pick(lx.prefixes, rng);
          break;
        case Slot::Obj1:
          piece = program.target.instance_name ? pick(lx.phrases(ConceptType::Instance, *program.target.instance_name), rng)
                                               : pick(lx.phrases(ConceptType::Category, program.target.category), rng);
          break;
        case Slot::Att1:
          need(program.target.attribute.has_value(), tok.slot);
          piece = pick(lx.phrases(attribute_concept(program.target.attribute->kind), program.target.attribute->value), rng);
          break;
        case Slot::Loc1:
          need(program.target.location.has_value(), tok.slot);
          piece = pick(lx.phrases(ConceptType::Location, std::string(to_string(*program.target.location))), rng);
          break;
        case Slot::Rel:
          need(program.anchor.has_value(), tok.slot);
          piece = pick(lx.phrases(ConceptType::Relation, std::string(to_string(program.anchor->relation))), rng);
          break;
        case Slot::Obj2:
          need(program.anchor.has_value(), tok.slot);
          piece = pick(lx.phrases(ConceptType::Category, program.anchor->filter.category), rng);
          break;
        case Slot::Att2:
          need(program.anchor && program.anchor->filter.attribute, tok.slot);
          piece = pick(lx.phrases(attribute_concept(program.anchor->filter.attribute->kind),
                                  program.anchor->filter.attribute->value),
                       rng);
          break;
        case Slot::Loc2:
          need(program.anchor && program.anchor->filter.location, tok.slot);
          piece = pick(lx.phrases(ConceptType::Location, std::string(to_string(*program.anchor->filter.location))), rng);
          break;
      }
    }
    if (!text.empty()) text.push_back(' ');
    text += piece;
  }
  out.text = normalize_text(text);
  out.prefix = normalize_text(out.prefix);
  return out;
}

bool text_realizes_program(const std::string& text, const RefProgram& program, const Catalog& catalog) {
  const SubTemplate* tmpl = nullptr;
  try {
    tmpl = &catalog.template_by_id(program.sub_template_id);
  } catch (const CatalogError&) {
    return false;
  }
  if (tmpl->family != program.family) return false;
  const Lexicon& lx = catalog.lexicon;
  const auto options = [&](const SkeletonToken& tok) -> WordLists {
    const ObjectFilter& t = program.target;
    const AnchorClause* a = program.anchor ? &*program.anchor : nullptr;
    switch (tok.slot) {
      case Slot::Prefix: return split_all(lx.prefixes);
      case Slot::Obj1:
        return t.instance_name ? lookup(lx, ConceptType::Instance, *t.instance_name)
                               : lookup(lx, ConceptType::Category, t.category);
      case Slot::Att1:
        return t.attribute ? lookup(lx, attribute_concept(t.attribute->kind), t.attribute->value) : WordLists{};
      case Slot::Loc1:
        return t.location ? lookup(lx, ConceptType::Location, std::string(to_string(*t.location))) : WordLists{};
      case Slot::Rel:
        return a ? lookup(lx, ConceptType::Relation, std::string(to_string(a->relation))) : WordLists{};
      case Slot::Obj2: return a ? lookup(lx, ConceptType::Category, a->filter.category) : WordLists{};
      case Slot::Att2:
        return a && a->filter.attribute
                   ? lookup(lx, attribute_concept(a->filter.attribute->kind), a->filter.attribute->value)
                   : WordLists{};
      case Slot::Loc2:
        return a && a->filter.location ? lookup(lx, ConceptType::Location, std::string(to_string(*a->filter.location)))
                                       : WordLists{};
    }
    return {};
  };
  return match_template(text, *tmpl, options);
}

std::vector<int> matching_templates(const std::string& text, const Catalog& catalog) {
  const Lexicon& lx = catalog.lexicon;
  const auto all = [](const std::map<std::string, std::vector<std::string>>& table) {
    WordLists out;
    for (const auto& [key, phrases] : table)
      for (const auto& p : phrases) out.push_back(split_words(p));
    return out;
  };
  const WordLists prefixes = split_all(lx.prefixes);
  WordLists objects = all(lx.categories);
  for (auto& w : all(lx.instances)) objects.push_back(std::move(w));
  const WordLists categories = all(lx.categories);
  const WordLists colors = all(lx.colors);
  const WordLists instance_attrs = all(lx.instance_attributes);
  WordLists any_attr = colors;
  any_attr.insert(any_attr.end(), instance_attrs.begin(), instance_attrs.end());
  const WordLists relations = all(lx.relations);
  const WordLists locations = all(lx.locations);

  const auto options = [&](const SkeletonToken& tok) -> WordLists {
    switch (tok.slot) {
      case Slot::Prefix: return prefixes;
      case Slot::Obj1: return objects;
      case Slot::Obj2: return categories;
      case Slot::Att1:
      case Slot::Att2:
        if (!tok.attribute_kind) return any_attr;
        return *tok.attribute_kind == AttributeKind::Color ? colors : instance_attrs;
      case Slot::Loc1:
      case Slot::Loc2: return locations;
      case Slot::Rel: return relations;
    }
    return {};
  };
  std::vector<int> out;
  for (const auto& t : catalog.templates)
    if (match_template(text, t, options)) out.push_back(t.id);
  return out;
}

std::vector<ReferringExpression> generate_for_scene(const SceneGraph& scene, const Catalog& catalog,
                                                    const GenerationConfig& config,
                                                    const std::vector<Family>& families) {
  Rng rng(derive_seed(config.seed, scene.scene_id));
  std::vector<int> ids;
  for (const auto& o : scene.objects) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  std::set<Family> enabled(families.begin(), families.end());

  std::vector<ReferringExpression> out;
  std::set<std::pair<std::string, int>> seen;
  for (int id : ids) {
    for (Family family : enabled) {
      const auto q = config.quotas.find(family);
      const int quota = q == config.quotas.end() ? 0 : std::max(q->second, 0);
      int emitted = 0;
      for (int attempt = 0; attempt < 4 * quota && emitted < quota; ++attempt) {
        RefProgram program;
        try {
          program = build_program(scene, id, family, catalog, rng);
        } catch (const NoValidProgram&) {
          break;
        }
        RealizedText realized = realize_text(program, catalog, rng);
        if (split_words(realized.text).size() > config.max_tokens) continue;
        if (!seen.insert({realized.text, id}).second) continue;
        out.push_back({"", scene.scene_id, id, std::move(realized.text), std::move(realized.prefix), std::move(program)});
        ++emitted;
      }
    }
  }
  if (config.max_per_scene > 0 && out.size() > config.max_per_scene) {
    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(rng, order);
    order.resize(config.max_per_scene);
    std::sort(order.begin(), order.end());
    std::vector<ReferringExpression> kept;
    for (std::size_t i : order) kept.push_back(std::move(out[i]));
    out = std::move(kept);
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k].tuple_id = scene.scene_id + "#" + std::to_string(k);
  return out;
}

std::vector<ReferringExpression> generate_expressions(const std::vector<const SceneGraph*>& scenes,
                                                      const Catalog& catalog, const GenerationConfig& config,
                                                      const std::vector<Family>& families, unsigned threads) {
  std::vector<const SceneGraph*> sorted = scenes;
  std::sort(sorted.begin(), sorted.end(),
            [](const SceneGraph* a, const SceneGraph* b) { return a->scene_id < b->scene_id; });
  std::vector<std::vector<ReferringExpression>> per_scene(sorted.size());
  parallel_for(sorted.size(), threads,
               [&](std::size_t i) { per_scene[i] = generate_for_scene(*sorted[i], catalog, config, families); });
  std::vector<ReferringExpression> out;
  for (auto& batch : per_scene)
    for (auto& e : batch) out.push_back(std::move(e));
  return out;
}

std::string program_structure_error(const RefProgram& program, const Catalog& catalog) {
  const SubTemplate* tmpl = nullptr;
  try {
    tmpl = &catalog.template_by_id(program.sub_template_id);
  } catch (const CatalogError& e) {
    return e.what();
  }
  if (tmpl->family != program.family)
    return "sub-template " + std::to_string(tmpl->id) + " belongs to family " + std::string(to_string(tmpl->family));
  const ObjectFilter& t = program.target;
  if ((program.family == Family::Name) != t.instance_name.has_value())
    return "instance names are used by the name family only";
  const auto kind_ok = [&](Slot slot, const std::optional<Attribute>& a) {
    const auto kind = tmpl->attribute_kind(slot);
    return !a || !kind || a->kind == *kind;
  };
  if (tmpl->has(Slot::Att1) != t.attribute.has_value() || !kind_ok(Slot::Att1, t.attribute))
    return "target attribute does not fit the sub-template";
  if (tmpl->has(Slot::Loc1) != t.location.has_value()) return "target location does not fit the sub-template";
  if (tmpl->has(Slot::Obj2) != program.anchor.has_value()) return "anchor does not fit the sub-template";
  if (program.anchor) {
    const ObjectFilter& a = program.anchor->filter;
    if (a.instance_name) return "anchors are referred to by category";
    if (tmpl->has(Slot::Att2) != a.attribute.has_value() || !kind_ok(Slot::Att2, a.attribute))
      return "anchor attribute does not fit the sub-template";
    if (tmpl->has(Slot::Loc2) != a.location.has_value()) return "anchor location does not fit the sub-template";
  }
  return {};
}

ValidationReport validate_tuples(const std::map<std::string, SceneGraph>& scenes,
                                 const std::vector<ReferringExpression>& tuples, const Catalog& catalog) {
  ValidationReport report;
  report.tuples_checked = tuples.size();
  std::set<std::string> tuple_ids;
  std::set<std::tuple<std::string, std::string, int>> seen;
  const auto flag = [&](const ReferringExpression& e, const char* kind, std::string message) {
    report.violations.push_back({e.tuple_id, kind, std::move(message)});
  };

  for (const auto& e : tuples) {
    if (!tuple_ids.insert(e.tuple_id).second) flag(e, "duplicate", "tuple id appears more than once");
    if (!seen.insert({e.scene_id, e.text, e.target_id}).second)
      flag(e, "duplicate", "same text and target as an earlier tuple");

    const auto it = scenes.find(e.scene_id);
    if (it == scenes.end()) {
      flag(e, "missing_scene", "unknown scene '" + e.scene_id + "'");
      continue;
    }
    const SceneGraph& scene = it->second;
    const ObjectNode* target = scene.find(e.target_id);
    if (!target) {
      flag(e, "missing_target", "scene '" + e.scene_id + "' has no object " + std::to_string(e.target_id));
      continue;
    }
    if (const auto err = program_structure_error(e.program, catalog); !err.empty()) flag(e, "structure", err);

    try {
      const auto ids = execute_program(e.program, scene);
      if (ids.size() != 1 || *ids.begin() != e.target_id)
        flag(e, "not_unique", "program denotes " + std::to_string(ids.size()) + " object(s), not exactly the target");
    } catch (const AmbiguousAnchorError& err) {
      flag(e, "anchor_error", err.what());
    }

    if (e.program.family != Family::Name) {
      const auto n = std::count_if(scene.objects.begin(), scene.objects.end(),
                                   [&](const ObjectNode& o) { return o.category == target->category; });
      if (n < 2) flag(e, "ambiguity", "target category '" + target->category + "' is not ambiguous in the scene");
    }

    const bool prefix_ok = std::find(catalog.lexicon.prefixes.begin(), catalog.lexicon.prefixes.end(), e.prefix) !=
                               catalog.lexicon.prefixes.end() &&
                           e.text.compare(0, e.prefix.size() + 1, e.prefix + " ") == 0;
    if (!prefix_ok || !text_realizes_program(e.text, e.program, catalog))
      flag(e, "text_mismatch", "text does not realize the program");
  }
  return report;
}

}  // namespace refgrasp
