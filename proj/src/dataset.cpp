#include "refgrasp/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "refgrasp/image_io.hpp"
#include "refgrasp/parallel.hpp"
#include "refgrasp/rng.hpp"

namespace refgrasp {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {


std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << content;
  if (!out) throw DatasetError("write failed: " + path.string());
}

Json parse_json(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw DatasetError(where + ": " + e.what());
  }
}

void check_id(const std::string& id, const std::string& what) {
  const bool ok = !id.empty() && id != "." && id != ".." && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
  if (!ok) throw DatasetError(what + " '" + id + "' must use only letters, digits, '_', '-' and '.'");
}

std::string mask_rel_path(const std::string& scene_id, int object_id) {
  return "masks/" + scene_id + "/" + std::to_string(object_id) + ".png";
}

Json bbox_to_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

BBox bbox_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw DatasetError("bbox must be [x, y, w, h]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

Json filter_to_json(const ObjectFilter& f) {
  Json j{{"category", f.category}};
  if (f.instance_name) j["instance_name"] = *f.instance_name;
  if (f.attribute) j["attribute"] = {{"kind", std::string(to_string(f.attribute->kind))}, {"value", f.attribute->value}};
  if (f.location) j["location"] = std::string(to_string(*f.location));
  return j;
}

ObjectFilter filter_from_json(const Json& j) {
  ObjectFilter f;
  f.category = j.at("category").get<std::string>();
  if (j.contains("instance_name")) f.instance_name = j.at("instance_name").get<std::string>();
  if (j.contains("attribute")) {
    const auto kind = parse_attribute_kind(j.at("attribute").at("kind").get<std::string>());
    if (!kind) throw DatasetError("unknown attribute kind");
    f.attribute = Attribute{*kind, j.at("attribute").at("value").get<std::string>()};
  }
  if (j.contains("location")) {
    const auto loc = parse_location(j.at("location").get<std::string>());
    if (!loc) throw DatasetError("unknown location label");
    f.location = *loc;
  }
  return f;
}

Json relation_config_to_json(const RelationConfig& c) {
  return {{"sector_offset_deg", c.sector_offset_deg},
          {"on_overlap_fraction", c.on_overlap_fraction},
          {"on_depth_margin_m", c.on_depth_margin_m}};
}

RelationConfig relation_config_from_json(const Json& j) {
  RelationConfig c;
  c.sector_offset_deg = j.value("sector_offset_deg", c.sector_offset_deg);
  c.on_overlap_fraction = j.value("on_overlap_fraction", c.on_overlap_fraction);
  c.on_depth_margin_m = j.value("on_depth_margin_m", c.on_depth_margin_m);
  return c;
}

Json scene_to_json(const SceneGraph& s) {
  Json objects = Json::array();
  for (const auto& o : s.objects) {
    Json jo{{"id", o.id},
            {"category", o.category},
            {"instance_name", o.instance_name},
            {"name_synonyms", o.name_synonyms},
            {"bbox", bbox_to_json(o.bbox)},
            {"mask", mask_rel_path(s.scene_id, o.id)}};
    if (o.color) jo["color"] = *o.color;
    if (o.instance_attribute) jo["instance_attribute"] = *o.instance_attribute;
    if (o.centroid) jo["centroid"] = Json::array({o.centroid->x, o.centroid->y});
    if (o.depth_m) jo["depth_m"] = *o.depth_m;
    Json grasps = Json::array();
    for (const auto& g : o.grasps) grasps.push_back(grasp_to_json(g));
    jo["grasps"] = std::move(grasps);
    objects.push_back(std::move(jo));
  }
  Json relations = Json::array();
  for (const auto& e : s.relations)
    relations.push_back({{"subject", e.subject_id}, {"object", e.object_id}, {"predicate", std::string(to_string(e.predicate))}});
  Json locations = Json::array();
  for (const auto& l : s.locations)
    locations.push_back({{"object", l.object_id}, {"label", std::string(to_string(l.label))}, {"scope", l.scope}});
  return {{"scene_id", s.scene_id}, {"height", s.height},      {"width", s.width},
          {"rgb_path", s.rgb_path}, {"depth_path", s.depth_path}, {"split", std::string(to_string(s.split))},
          {"objects", objects},     {"relations", relations},  {"locations", locations}};
}

SceneGraph scene_from_json(const Json& j, const fs::path& root) {
  SceneGraph s;
  s.scene_id = j.at("scene_id").get<std::string>();
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  s.rgb_path = j.value("rgb_path", "");
  s.depth_path = j.value("depth_path", "");
  const auto split = parse_split(j.at("split").get<std::string>());
  if (!split) throw DatasetError("unknown split");
  s.split = *split;
  for (const auto& jo : j.at("objects")) {
    ObjectNode o;
    o.id = jo.at("id").get<int>();
    o.category = jo.at("category").get<std::string>();
    o.instance_name = jo.at("instance_name").get<std::string>();
    o.name_synonyms = jo.value("name_synonyms", std::vector<std::string>{});
    if (jo.contains("color")) o.color = jo.at("color").get<std::string>();
    if (jo.contains("instance_attribute")) o.instance_attribute = jo.at("instance_attribute").get<std::string>();
    if (jo.contains("centroid")) o.centroid = Point2d{jo.at("centroid").at(0).get<double>(), jo.at("centroid").at(1).get<double>()};
    if (jo.contains("depth_m")) o.depth_m = jo.at("depth_m").get<double>();
    o.bbox = bbox_from_json(jo.at("bbox"));
    const fs::path mask_path = root / jo.at("mask").get<std::string>();
    if (!fs::exists(mask_path))
      throw DatasetError("object " + std::to_string(o.id) + ": missing mask file " + mask_path.string());
    o.mask = read_mask_png(mask_path);
    for (const auto& jg : jo.at("grasps")) o.grasps.push_back(grasp_from_json(jg));
    s.objects.push_back(std::move(o));
  }
  for (const auto& je : j.at("relations")) {
    const auto p = parse_predicate(je.at("predicate").get<std::string>());
    if (!p) throw DatasetError("unknown predicate");
    s.relations.push_back({je.at("subject").get<int>(), je.at("object").get<int>(), *p});
  }
  for (const auto& jl : j.at("locations")) {
    const auto l = parse_location(jl.at("label").get<std::string>());
    if (!l) throw DatasetError("unknown location label");
    s.locations.push_back({jl.at("object").get<int>(), *l, jl.at("scope").get<std::string>()});
  }
  return s;
}

Json tuple_to_json(const ReferringExpression& e, const ObjectNode& target) {
  Json grasps = Json::array();
  for (const auto& g : target.grasps) grasps.push_back(grasp_to_json(g));
  return {{"tuple_id", e.tuple_id},
          {"scene_id", e.scene_id},
          {"target_id", e.target_id},
          {"text", e.text},
          {"prefix", e.prefix},
          {"program", program_to_json(e.program)},
          {"bbox", bbox_to_json(target.bbox)},
          {"mask", mask_rel_path(e.scene_id, e.target_id)},
          {"grasps", grasps}};
}

ReferringExpression tuple_from_json(const Json& j) {
  ReferringExpression e;
  e.tuple_id = j.at("tuple_id").get<std::string>();
  e.scene_id = j.at("scene_id").get<std::string>();
  e.target_id = j.at("target_id").get<int>();
  e.text = j.at("text").get<std::string>();
  e.prefix = j.at("prefix").get<std::string>();
  e.program = program_from_json(j.at("program"));
  return e;
}

std::size_t tuple_index(const std::string& tuple_id) {
  const auto hash = tuple_id.rfind('#');
  if (hash == std::string::npos) return 0;
  return static_cast<std::size_t>(std::strtoull(tuple_id.c_str() + hash + 1, nullptr, 10));
}

void clear_output_root(const fs::path& root) {
  if (!fs::exists(root)) {
    fs::create_directories(root);
    return;
  }
  if (!fs::is_directory(root)) throw DatasetError(root.string() + " exists and is not a directory");
  if (fs::is_empty(root)) return;
  if (!is_dataset_root(root))
    throw DatasetError("refusing to write into non-empty directory " + root.string() + " (not a dataset root)");
  for (const char* entry : {"manifest.json", "catalog.json", "scenes", "masks", "tuples"}) fs::remove_all(root / entry);
}

double parse_number(const std::string& token, int line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) throw GraspParseError(line, "not a number: '" + token + "'");
  if (!std::isfinite(v)) throw GraspParseError(line, "non-finite coordinate '" + token + "'");
  return v;
}

}  // namespace

nlohmann::json grasp_to_json(const GraspRectangle& g) {
  return {{"x", g.center().x}, {"y", g.center().y}, {"angle", g.angle()}, {"width", g.width()}, {"height", g.height()}};
}

GraspRectangle grasp_from_json(const nlohmann::json& j) {
  try {
    return GraspRectangle({j.at("x").get<double>(), j.at("y").get<double>()}, j.at("angle").get<double>(),
                          j.at("width").get<double>(), j.at("height").get<double>());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("invalid grasp: ") + e.what());
  }
}

nlohmann::json program_to_json(const RefProgram& p) {
  Json j{{"family", std::string(to_string(p.family))}, {"sub_template_id", p.sub_template_id}, {"target", filter_to_json(p.target)}};
  if (p.anchor)
    j["anchor"] = {{"relation", std::string(to_string(p.anchor->relation))}, {"filter", filter_to_json(p.anchor->filter)}};
  return j;
}

RefProgram program_from_json(const nlohmann::json& j) {
  RefProgram p;
  const auto family = parse_family(j.at("family").get<std::string>());
  if (!family) throw DatasetError("unknown family");
  p.family = *family;
  p.sub_template_id = j.at("sub_template_id").get<int>();
  p.target = filter_from_json(j.at("target"));
  if (j.contains("anchor")) {
    const auto rel = parse_predicate(j.at("anchor").at("relation").get<std::string>());
    if (!rel) throw DatasetError("unknown relation");
    p.anchor = AnchorClause{*rel, filter_from_json(j.at("anchor").at("filter"))};
  }
  return p;
}

std::map<std::string, Split> Dataset::splits() const {
  std::map<std::string, Split> out;
  for (const auto& [id, s] : scenes) out[id] = s.split;
  return out;
}

const SceneGraph& Dataset::scene(const std::string& id) const {
  const auto it = scenes.find(id);
  if (it == scenes.end()) throw DatasetError("unknown scene '" + id + "'");
  return it->second;
}

const ObjectNode& Dataset::target(const ReferringExpression& e) const {
  const ObjectNode* o = scene(e.scene_id).find(e.target_id);
  if (!o) throw DatasetError("tuple '" + e.tuple_id + "': scene '" + e.scene_id + "' has no object " + std::to_string(e.target_id));
  return *o;
}

void sort_tuples(std::vector<ReferringExpression>& tuples) {
  std::stable_sort(tuples.begin(), tuples.end(), [](const ReferringExpression& a, const ReferringExpression& b) {
    if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
    const auto ia = tuple_index(a.tuple_id), ib = tuple_index(b.tuple_id);
    if (ia != ib) return ia < ib;
    return a.tuple_id < b.tuple_id;
  });
}

bool is_dataset_root(const fs::path& root) { return fs::is_regular_file(root / "manifest.json"); }

void write_dataset(const Dataset& dataset, const fs::path& root) {
  for (const auto& [id, scene] : dataset.scenes) {
    check_id(id, "scene id");
    if (scene.scene_id != id) throw DatasetError("scene '" + id + "' is stored under a different id");
  }
  std::vector<ReferringExpression> tuples = dataset.tuples;
  sort_tuples(tuples);
  std::map<Split, std::string> tuple_lines;
  for (const auto& e : tuples) {
    const SceneGraph& scene = dataset.scene(e.scene_id);
    tuple_lines[scene.split] += tuple_to_json(e, dataset.target(e)).dump() + "\n";
  }

  clear_output_root(root);
  fs::create_directories(root / "scenes");
  fs::create_directories(root / "masks");
  fs::create_directories(root / "tuples");

  Json splits = Json::object();
  for (Split s : kAllSplits) splits[std::string(to_string(s))] = Json::array();
  std::size_t objects = 0;
  for (const auto& [id, scene] : dataset.scenes) {
    splits[std::string(to_string(scene.split))].push_back(id);
    objects += scene.objects.size();
    write_file(root / "scenes" / (id + ".json"), scene_to_json(scene).dump(2) + "\n");
    fs::create_directories(root / "masks" / id);
    for (const auto& o : scene.objects) write_mask_png(root / mask_rel_path(id, o.id), o.mask);
  }
  for (Split s : kAllSplits) write_file(root / "tuples" / (std::string(to_string(s)) + ".jsonl"), tuple_lines[s]);
  write_file(root / "catalog.json", catalog_to_json(dataset.catalog).dump(2) + "\n");

  const Json manifest{{"name", dataset.name},
                      {"version", dataset.version},
                      {"format", std::string(kDatasetFormat)},
                      {"counts", {{"scenes", dataset.scenes.size()}, {"objects", objects}, {"tuples", tuples.size()}}},
                      {"splits", splits},
                      {"relation_config", relation_config_to_json(dataset.relation_config)}};
  write_file(root / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& root, unsigned threads) {
  if (!is_dataset_root(root)) throw DatasetError("missing manifest.json in " + root.string());
  const Json manifest = parse_json(read_file(root / "manifest.json"), "manifest.json");
  Dataset ds;
  std::vector<std::pair<std::string, Split>> ids;
  try {
    if (manifest.at("format").get<std::string>() != kDatasetFormat)
      throw DatasetError("manifest.json: unsupported format '" + manifest.at("format").get<std::string>() + "'");
    ds.name = manifest.at("name").get<std::string>();
    ds.version = manifest.at("version").get<std::string>();
    ds.relation_config = relation_config_from_json(manifest.value("relation_config", Json::object()));
    for (const auto& [name, list] : manifest.at("splits").items()) {
      const auto split = parse_split(name);
      if (!split) throw DatasetError("manifest.json: unknown split '" + name + "'");
      for (const auto& id : list) ids.emplace_back(id.get<std::string>(), *split);
    }
  } catch (const Json::exception& e) {
    throw DatasetError(std::string("manifest.json: ") + e.what());
  }
  try {
    ds.catalog = load_catalog(root / "catalog.json");
  } catch (const CatalogError& e) {
    throw DatasetError(std::string("catalog.json: ") + e.what());
  }

  std::set<std::string> seen_ids;
  for (const auto& [id, split] : ids) {
    check_id(id, "scene id");
    if (!seen_ids.insert(id).second) throw DatasetError("scene '" + id + "' is listed in more than one split");
  }

  std::vector<SceneGraph> loaded(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    const auto& [id, split] = ids[i];
    const std::string where = "scene '" + id + "'";
    const fs::path path = root / "scenes" / (id + ".json");
    if (!fs::exists(path)) throw DatasetError(where + ": missing scene file " + path.string());
    SceneGraph scene;
    try {
      scene = scene_from_json(parse_json(read_file(path), where), root);
    } catch (const Json::exception& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const ImageIoError& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const DatasetError& e) {
      if (std::string(e.what()).rfind(where, 0) == 0) throw;
      throw DatasetError(where + ": " + e.what());
    }
    if (scene.scene_id != id) throw DatasetError(where + ": file declares scene id '" + scene.scene_id + "'");
    if (scene.split != split) throw DatasetError(where + ": split differs from the manifest");
    try {
      validate_scene(scene);
    } catch (const SceneError& e) {
      throw DatasetError(e.what());
    }
    SceneGraph recomputed = scene;
    try {
      resolve_derived(recomputed, ds.relation_config);
    } catch (const SceneError& e) {
      throw DatasetError(e.what());
    }
    if (recomputed.relations != scene.relations)
      throw DatasetError(where + ": cached relations differ from recomputation");
    if (recomputed.locations != scene.locations)
      throw DatasetError(where + ": cached locations differ from recomputation");
    loaded[i] = std::move(scene);
  });
  for (auto& s : loaded) {
    std::string id = s.scene_id;
    ds.scenes.emplace(std::move(id), std::move(s));
  }

  std::set<std::string> tuple_ids;
  for (Split split : kAllSplits) {
    const std::string rel = "tuples/" + std::string(to_string(split)) + ".jsonl";
    const fs::path path = root / rel;
    if (!fs::exists(path)) throw DatasetError("missing tuple file " + rel);
    std::istringstream in(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = rel + " line " + std::to_string(line_no);
      ReferringExpression e;
      Json j;
      try {
        j = parse_json(line, where);
        e = tuple_from_json(j);
      } catch (const Json::exception& ex) {
        throw DatasetError(where + ": " + ex.what());
      } catch (const DatasetError& ex) {
        throw DatasetError(where + ": " + ex.what());
      }
      const std::string tw = "tuple '" + e.tuple_id + "'";
      if (!tuple_ids.insert(e.tuple_id).second) throw DatasetError(tw + ": duplicate tuple id");
      const auto it = ds.scenes.find(e.scene_id);
      if (it == ds.scenes.end()) throw DatasetError(tw + ": unknown scene '" + e.scene_id + "'");
      if (it->second.split != split) throw DatasetError(tw + ": stored in " + rel + " but its scene is in another split");
      const ObjectNode* target = it->second.find(e.target_id);
      if (!target) throw DatasetError(tw + ": scene '" + e.scene_id + "' has no object " + std::to_string(e.target_id));
      try {
        if (!(bbox_from_json(j.at("bbox")) == target->bbox)) throw DatasetError(tw + ": bbox differs from the target's");
      } catch (const Json::exception& ex) {
        throw DatasetError(tw + ": " + ex.what());
      }
      ds.tuples.push_back(std::move(e));
    }
  }
  sort_tuples(ds.tuples);

  try {
    const auto& counts = manifest.at("counts");
    if (counts.at("scenes").get<std::size_t>() != ds.scenes.size() ||
        counts.at("tuples").get<std::size_t>() != ds.tuples.size())
      throw DatasetError("manifest.json: counts do not match the stored scenes and tuples");
  } catch (const Json::exception& e) {
    throw DatasetError(std::string("manifest.json: ") + e.what());
  }
  return ds;
}

ValidationReport validate_tuples(const Dataset& dataset) {
  return validate_tuples(dataset.scenes, dataset.tuples, dataset.catalog);
}

std::vector<GraspRectangle> import_corner_grasps(std::string_view text) {
  std::vector<Point2d> corners;
  std::vector<int> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (fields >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) throw GraspParseError(line_no, "expected two numbers \"x y\"");
    corners.push_back({parse_number(tokens[0], line_no), parse_number(tokens[1], line_no)});
    lines.push_back(line_no);
  }
  if (corners.size() % 4 != 0)
    throw GraspParseError(lines.empty() ? line_no : lines.back(),
                          "corner count " + std::to_string(corners.size()) + " is not a multiple of 4");
  std::vector<GraspRectangle> out;
  for (std::size_t i = 0; i < corners.size(); i += 4) {
    try {
      out.push_back(rect_from_corners({corners[i], corners[i + 1], corners[i + 2], corners[i + 3]}));
    } catch (const std::invalid_argument& e) {
      throw GraspParseError(lines[i], std::string("degenerate rectangle: ") + e.what());
    }
  }
  return out;
}

Dataset import_ocid_like(const fs::path& root, const ImportOptions& options) {
  if (!fs::is_directory(root)) throw DatasetError("import root is not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "objects.json")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());

  Dataset ds;
  ds.relation_config = options.relation_config;
  for (const fs::path& dir : dirs) {
    SceneGraph scene;
    scene.scene_id = dir.filename().string();
    check_id(scene.scene_id, "scene directory");
    const std::string where = "scene '" + scene.scene_id + "'";
    try {
      if (!fs::exists(dir / "label.png")) throw DatasetError("missing label.png");
      const GrayImage labels = read_gray_png(dir / "label.png");
      scene.height = labels.height;
      scene.width = labels.width;
      if (fs::exists(dir / "rgb.png")) scene.rgb_path = scene.scene_id + "/rgb.png";
      std::optional<GrayImage> depth;
      if (fs::exists(dir / "depth.png")) {
        depth = read_gray_png(dir / "depth.png");
        scene.depth_path = scene.scene_id + "/depth.png";
      }

      const Json objects = parse_json(read_file(dir / "objects.json"), "objects.json");
      for (const auto& jo : objects) {
        ObjectNode o;
        o.id = jo.at("label").get<int>();
        o.category = jo.at("category").get<std::string>();
        o.instance_name = jo.at("instance_name").get<std::string>();
        o.name_synonyms = jo.value("synonyms", std::vector<std::string>{});
        if (jo.contains("color")) o.color = jo.at("color").get<std::string>();
        if (jo.contains("instance_attribute")) o.instance_attribute = jo.at("instance_attribute").get<std::string>();
        o.mask = Mask(labels.height, labels.width);
        for (int y = 0; y < labels.height; ++y)
          for (int x = 0; x < labels.width; ++x)
            if (labels.at(x, y) == o.id) o.mask.set(x, y);
        const auto box = o.mask.bbox();
        if (!box) throw DatasetError("label " + std::to_string(o.id) + " has no pixels");
        o.bbox = *box;
        o.centroid = o.mask.centroid();
        if (depth) o.depth_m = mean_valid_depth(o.mask, *depth, options.depth_scale_m);
        scene.objects.push_back(std::move(o));
      }
      std::sort(scene.objects.begin(), scene.objects.end(),
                [](const ObjectNode& a, const ObjectNode& b) { return a.id < b.id; });

      if (fs::exists(dir / "grasps.txt")) {
        for (const auto& g : import_corner_grasps(read_file(dir / "grasps.txt"))) {
          if (!point_in_image(g.center(), scene.height, scene.width)) continue;
          const PixelCoord px = nearest_pixel(g.center(), scene.height, scene.width);
          const int label = labels.at(px.x, px.y);
          for (auto& o : scene.objects)
            if (o.id == label) o.grasps.push_back(g);
        }
      }
      quantize_scene(scene);
      validate_scene(scene);
      resolve_derived(scene, ds.relation_config);
    } catch (const DatasetError& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const Json::exception& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const ImageIoError& e) {
      throw DatasetError(where + ": " + e.what());
    } catch (const SceneError& e) {
      throw DatasetError(where + ": " + e.what());
    }
    ds.scenes.emplace(scene.scene_id, std::move(scene));
  }

  if (fs::exists(root / "splits.json")) {
    const Json splits = parse_json(read_file(root / "splits.json"), "splits.json");
    std::set<std::string> assigned;
    for (const auto& [name, list] : splits.items()) {
      const auto split = parse_split(name);
      if (!split) throw DatasetError("splits.json: unknown split '" + name + "'");
      for (const auto& id : list) {
        const auto sid = id.get<std::string>();
        const auto it = ds.scenes.find(sid);
        if (it == ds.scenes.end()) throw DatasetError("splits.json: unknown scene '" + sid + "'");
        if (!assigned.insert(sid).second) throw DatasetError("splits.json: scene '" + sid + "' listed twice");
        it->second.split = *split;
      }
    }
    for (const auto& [id, _] : ds.scenes)
      if (!assigned.count(id)) throw DatasetError("splits.json: scene '" + id + "' has no split");
  }

  ds.catalog = default_catalog();
  std::vector<const SceneGraph*> ptrs;
  for (const auto& [id, s] : ds.scenes) ptrs.push_back(&s);
  augment_lexicon(ds.catalog.lexicon, ptrs);
  return ds;
}

void assign_splits(std::map<std::string, SceneGraph>& scenes, std::uint64_t seed, const SplitFractions& f) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || f.train + f.val + f.test <= 0)
    throw std::invalid_argument("split fractions must be nonnegative with a positive sum");
  std::vector<std::string> ids;
  for (const auto& [id, _] : scenes) ids.push_back(id);
  Rng rng(derive_seed(seed, "splits"));
  shuffle(rng, ids);
  const double total = f.train + f.val + f.test;
  const auto n = ids.size();
  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(n * f.train / total)));
  const auto n_val = std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(n * f.val / total)));
  for (std::size_t i = 0; i < n; ++i)
    scenes.at(ids[i]).split = i < n_train ? Split::Train : i < n_train + n_val ? Split::Val : Split::Test;
}

StatsReport compute_stats(const Dataset& dataset) {
  StatsReport r;
  for (Split s : kAllSplits) {
    r.scenes_per_split[s] = 0;
    for (Family f : kAllFamilies) r.family_counts[s][f] = 0;
  }
  std::set<std::string> categories, instances;
  for (const auto& [id, scene] : dataset.scenes) {
    ++r.scenes_per_split[scene.split];
    r.objects += scene.objects.size();
    for (const auto& o : scene.objects) {
      categories.insert(o.category);
      instances.insert(o.instance_name);
    }
  }
  r.scenes = dataset.scenes.size();
  r.categories = categories.size();
  r.instances = instances.size();
  r.tuples = dataset.tuples.size();

  std::map<ConceptType, std::set<std::string>> unique;
  for (ConceptType t : kAllConceptTypes) r.concepts[t] = {};
  const auto mention = [&](ConceptType t, const std::string& value) {
    unique[t].insert(value);
    ++r.concepts[t].total;
  };
  const auto mention_filter = [&](const ObjectFilter& f) {
    if (f.instance_name)
      mention(ConceptType::Instance, *f.instance_name);
    else
      mention(ConceptType::Category, f.category);
    if (f.attribute)
      mention(f.attribute->kind == AttributeKind::Color ? ConceptType::Color : ConceptType::InstanceAttribute,
              f.attribute->value);
    if (f.location) mention(ConceptType::Location, std::string(to_string(*f.location)));
  };
  for (const auto& e : dataset.tuples) {
    ++r.family_counts[dataset.scene(e.scene_id).split][e.program.family];
    mention_filter(e.program.target);
    if (e.program.anchor) {
      mention(ConceptType::Relation, std::string(to_string(e.program.anchor->relation)));
      mention_filter(e.program.anchor->filter);
    }
  }
  for (auto& [t, values] : unique) r.concepts[t].unique = values.size();
  return r;
}

nlohmann::json stats_to_json(const StatsReport& s) {
  Json splits = Json::object();
  for (const auto& [split, n] : s.scenes_per_split) {
    Json families = Json::object();
    std::size_t total = 0;
    for (const auto& [f, c] : s.family_counts.at(split)) {
      families[std::string(to_string(f))] = c;
      total += c;
    }
    splits[std::string(to_string(split))] = {{"scenes", n}, {"tuples", total}, {"families", families}};
  }
  Json concepts = Json::object();
  for (const auto& [t, c] : s.concepts) concepts[std::string(to_string(t))] = {{"unique", c.unique}, {"total", c.total}};
  return {{"scenes", s.scenes},         {"objects", s.objects}, {"categories", s.categories},
          {"instances", s.instances},   {"tuples", s.tuples},   {"splits", splits},
          {"concepts", concepts}};
}

std::string format_stats_table(const StatsReport& s) {
  std::ostringstream out;
  out << "scenes      " << s.scenes << "\n"
      << "objects     " << s.objects << "\n"
      << "categories  " << s.categories << "\n"
      << "instances   " << s.instances << "\n"
      << "tuples      " << s.tuples << "\n\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %7s %8s %10s %9s %9s %7s %8s\n", "split", "scenes", "name", "attribute",
                "relation", "location", "mixed", "total");
  out << buf;
  for (const auto& [split, n] : s.scenes_per_split) {
    const auto& fc = s.family_counts.at(split);
    std::size_t total = 0;
    for (const auto& [f, c] : fc) total += c;
    std::snprintf(buf, sizeof buf, "%-6s %7zu %8zu %10zu %9zu %9zu %7zu %8zu\n", std::string(to_string(split)).c_str(), n,
                  fc.at(Family::Name), fc.at(Family::Attribute), fc.at(Family::Relation), fc.at(Family::Location),
                  fc.at(Family::Mixed), total);
    out << buf;
  }
  out << "\n";
  std::snprintf(buf, sizeof buf, "%-20s %8s %8s\n", "concept", "unique", "total");
  out << buf;
  for (const auto& [t, c] : s.concepts) {
    std::snprintf(buf, sizeof buf, "%-20s %8zu %8zu\n", std::string(to_string(t)).c_str(), c.unique, c.total);
    out << buf;
  }
  return out.str();
}

}  // namespace refgrasp
