#include "refgrasp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "refgrasp/dataset.hpp"
#include "refgrasp/image_io.hpp"
#include "refgrasp/metrics.hpp"
#include "refgrasp/rng.hpp"
#include "refgrasp/synth.hpp"

namespace refgrasp {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  std::string format = "table";
};

void add_threads(CLI::App* sub, Common& c) {
  sub->add_option("--threads", c.threads, "Worker threads; never changes output bytes")->check(CLI::Range(1u, 1024u));
}

void add_format(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"table", "machine"}));
}

void add_seed(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed (default " + std::to_string(kDefaultSeed) + ")");
}

const std::vector<std::string> kFamilyChoices = {"name", "attribute", "relation", "location", "mixed"};

CLI::Option* add_families(CLI::App* sub, std::vector<std::string>& families) {
  return sub->add_option("--families", families, "Comma-separated template families")
      ->delimiter(',')
      ->check(CLI::IsMember(kFamilyChoices));
}

std::vector<Family> to_families(const std::vector<std::string>& names) {
  if (names.empty()) return {kAllFamilies.begin(), kAllFamilies.end()};
  std::vector<Family> out;
  for (const auto& n : names) {
    const Family f = *parse_family(n);
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string join(const std::vector<Family>& families) {
  std::string s;
  for (Family f : families) s += (s.empty() ? "" : ",") + std::string(to_string(f));
  return s;
}

std::string resolve_dataset(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kDatasetEnvVar); env && *env) return env;
  throw UsageError(std::string("--dataset is required (or set ") + kDatasetEnvVar + ")");
}

bool same_path(const fs::path& a, const fs::path& b) {
  std::error_code ec1, ec2;
  const auto ca = fs::weakly_canonical(a, ec1);
  const auto cb = fs::weakly_canonical(b, ec2);
  return !ec1 && !ec2 && ca == cb;
}

void provenance(std::ostream& err, std::uint64_t seed, const std::string& config) {
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(fnv1a64(config)));
  err << "seed: " << seed << "\nconfig digest: " << digest << "\n";
}

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_stats(std::ostream& out, const StatsReport& stats, const Common& c) {
  if (c.format == "machine")
    out << stats_to_json(stats).dump(2) << "\n";
  else
    out << format_stats_table(stats);
}

// ---- generate ----

struct GenerateArgs {
  std::string dataset, out, input_format = "auto";
  std::vector<std::string> families, quotas;
  std::size_t max_per_scene = 0;
  std::size_t max_tokens = 20;
};

int run_generate(const GenerateArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const std::string in = resolve_dataset(a.dataset);
  if (same_path(in, a.out)) throw UsageError("--out must differ from --dataset");
  GenerationConfig g;
  g.seed = c.seed;
  g.max_per_scene = a.max_per_scene;
  g.max_tokens = a.max_tokens;
  for (const auto& q : a.quotas) {
    const auto eq = q.find('=');
    const auto fam = eq == std::string::npos ? std::nullopt : parse_family(q.substr(0, eq));
    if (!fam) throw UsageError("--quota expects <family>=<count>, got '" + q + "'");
    try {
      const int n = std::stoi(q.substr(eq + 1));
      if (n < 0) throw std::invalid_argument("negative");
      g.quotas[*fam] = n;
    } catch (const std::exception&) {
      throw UsageError("--quota count must be a nonnegative integer: '" + q + "'");
    }
  }
  const auto families = to_families(a.families);
  std::string format = a.input_format;
  if (format == "auto") format = is_dataset_root(in) ? "canonical" : "ocid";

  std::string config = "generate;format=" + format + ";families=" + join(families) +
                       ";max_per_scene=" + std::to_string(g.max_per_scene) + ";max_tokens=" + std::to_string(g.max_tokens) +
                       ";seed=" + std::to_string(c.seed) + ";quotas=";
  for (const auto& [f, n] : g.quotas) config += std::string(to_string(f)) + ":" + std::to_string(n) + ",";
  provenance(err, c.seed, config);

  Dataset ds;
  if (format == "canonical") {
    ds = load_dataset(in, c.threads);
    ds.tuples.clear();
  } else {
    ds = import_ocid_like(in);
    if (!fs::exists(fs::path(in) / "splits.json")) assign_splits(ds.scenes, c.seed);
  }
  std::vector<const SceneGraph*> scenes;
  for (const auto& [id, s] : ds.scenes) scenes.push_back(&s);
  ds.tuples = generate_expressions(scenes, ds.catalog, g, families, c.threads);
  sort_tuples(ds.tuples);
  write_dataset(ds, a.out);
  print_stats(out, compute_stats(ds), c);
  return 0;
}

// ---- synth ----

struct SynthArgs {
  std::string out, dataset, predictions;
  std::size_t scenes = 50;
  SynthConfig scene;
  std::vector<std::string> families;
  std::size_t max_per_scene = 0;
  NoiseSpec noise;
  double angle_jitter_deg = 0.0, angle_offset_deg = 0.0;
};

int run_synth(SynthArgs a, const Common& c, std::ostream& out, std::ostream& err) {
  if (a.out.empty() && a.predictions.empty()) throw UsageError("synth needs --out and/or --predictions");
  a.noise.angle_jitter_rad = a.angle_jitter_deg * kPi / 180.0;
  a.noise.angle_offset_rad = a.angle_offset_deg * kPi / 180.0;
  try {
    a.scene.validate();
    a.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto families = to_families(a.families);
  std::ostringstream config;
  config << "synth;scenes=" << a.scenes << ";objects=" << a.scene.min_objects << "-" << a.scene.max_objects
         << ";image=" << a.scene.height << "x" << a.scene.width << ";grasps=" << a.scene.min_grasps << "-"
         << a.scene.max_grasps << ";families=" << join(families) << ";max_per_scene=" << a.max_per_scene
         << ";noise=" << a.noise.erosion_radius << "," << a.noise.dilation_radius << "," << a.noise.center_jitter_px << ","
         << a.angle_jitter_deg << "," << a.angle_offset_deg << "," << a.noise.width_scale_jitter << ","
         << a.noise.substitution_probability << ";seed=" << c.seed;
  provenance(err, c.seed, config.str());

  Dataset ds;
  if (!a.out.empty()) {
    SynthDatasetConfig cfg;
    cfg.scenes = a.scenes;
    cfg.scene = a.scene;
    cfg.generation.seed = c.seed;
    cfg.generation.max_per_scene = a.max_per_scene;
    cfg.families = families;
    ds = generate_synthetic_dataset(cfg, c.threads);
    write_dataset(ds, a.out);
  } else {
    ds = load_dataset(resolve_dataset(a.dataset), c.threads);
  }
  if (!a.predictions.empty()) save_predictions(a.predictions, oracle_predictions(ds, a.noise, c.seed, c.threads));

  if (c.format == "machine") {
    out << Json{{"scenes", ds.scenes.size()}, {"tuples", ds.tuples.size()}}.dump() << "\n";
  } else {
    if (!a.out.empty()) out << "wrote " << ds.scenes.size() << " scenes and " << ds.tuples.size() << " tuples to " << a.out << "\n";
    if (!a.predictions.empty()) out << "wrote " << ds.tuples.size() << " predictions to " << a.predictions << "\n";
  }
  return 0;
}

// ---- validate / stats ----

int run_validate(const std::string& dataset, const Common& c, std::ostream& out, std::ostream& err) {
  const std::string in = resolve_dataset(dataset);
  provenance(err, c.seed, "validate");
  Dataset ds;
  try {
    ds = load_dataset(in, c.threads);
  } catch (const std::exception& e) {
    if (c.format == "machine")
      out << Json{{"ok", false}, {"load_error", e.what()}}.dump() << "\n";
    else
      out << "load error: " << e.what() << "\n";
    return 1;
  }
  const ValidationReport report = validate_tuples(ds);
  if (c.format == "machine") {
    Json v = Json::array();
    for (const auto& x : report.violations) v.push_back({{"tuple_id", x.tuple_id}, {"kind", x.kind}, {"message", x.message}});
    out << Json{{"ok", report.ok()}, {"tuples_checked", report.tuples_checked}, {"violations", v}}.dump(2) << "\n";
  } else {
    for (const auto& x : report.violations) out << x.tuple_id << "  " << x.kind << "  " << x.message << "\n";
    out << "checked " << report.tuples_checked << " tuples: " << report.violations.size() << " violation(s)\n";
  }
  return report.ok() ? 0 : 1;
}

int run_stats(const std::string& dataset, const Common& c, std::ostream& out, std::ostream& err) {
  const std::string in = resolve_dataset(dataset);
  provenance(err, c.seed, "stats");
  print_stats(out, compute_stats(load_dataset(in, c.threads)), c);
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string dataset, predictions, out, split = "all";
  std::vector<std::string> families;
  std::size_t top_n = kDefaultGraspCap;
  bool no_masks = false, no_grasps = false;
  double max_width = kDefaultMaxWidth;
};

int run_evaluate(const EvaluateArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const std::string in = resolve_dataset(a.dataset);
  if (a.no_masks && a.no_grasps) throw UsageError("--no-masks and --no-grasps leave nothing to evaluate");
  EvalOptions opt;
  opt.masks = !a.no_masks;
  opt.grasps = !a.no_grasps;
  opt.grasp_cap = a.top_n;
  if (a.split != "all") opt.split = parse_split(a.split);
  opt.families = to_families(a.families);
  opt.max_width = a.max_width;
  opt.threads = c.threads;
  provenance(err, c.seed,
             "evaluate;split=" + a.split + ";families=" + join(opt.families) + ";top_n=" + std::to_string(a.top_n) +
                 ";masks=" + std::to_string(opt.masks) + ";grasps=" + std::to_string(opt.grasps) +
                 ";max_width=" + fmt(a.max_width, "%.6g"));
  const Dataset ds = load_dataset(in, c.threads);
  const EvalReport report = evaluate(load_predictions(a.predictions), ds, opt);
  const Json j = report_to_json(report);
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    f << j.dump(2) << "\n";
  }
  if (c.format == "machine") {
    Json summary = j;
    summary.erase("samples");
    out << summary.dump(2) << "\n";
  } else {
    out << format_report_table(report);
  }
  return 0;
}

// ---- render-maps / decode ----

struct RenderArgs {
  std::string dataset, out, tuple, scene;
  int object = -1;
  double max_width = kDefaultMaxWidth;
};

int run_render(const RenderArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const std::string in = resolve_dataset(a.dataset);
  if (a.tuple.empty() == a.scene.empty()) throw UsageError("render-maps needs either --tuple or --scene with --object");
  if (!a.scene.empty() && a.object < 0) throw UsageError("--scene needs --object");
  if (same_path(in, a.out)) throw UsageError("--out must differ from --dataset");
  provenance(err, c.seed, "render-maps;max_width=" + fmt(a.max_width, "%.6g"));
  const Dataset ds = load_dataset(in, c.threads);
  const ObjectNode* target = nullptr;
  const SceneGraph* scene = nullptr;
  if (!a.tuple.empty()) {
    const auto it = std::find_if(ds.tuples.begin(), ds.tuples.end(),
                                 [&](const ReferringExpression& e) { return e.tuple_id == a.tuple; });
    if (it == ds.tuples.end()) throw std::runtime_error("unknown tuple '" + a.tuple + "'");
    scene = &ds.scene(it->scene_id);
    target = &ds.target(*it);
  } else {
    scene = &ds.scene(a.scene);
    target = &scene->get(a.object);
  }
  if (target->grasps.empty()) throw std::runtime_error("target object has no grasps to render");
  GraspMaps maps = render_grasp_maps(target->grasps, scene->height, scene->width, a.max_width);
  const MapImages images = export_map_images(maps);
  fs::create_directories(a.out);
  write_gray_png(fs::path(a.out) / "quality.png", images.quality);
  write_gray_png(fs::path(a.out) / "angle.png", images.angle);
  write_gray_png(fs::path(a.out) / "width.png", images.width);
  write_mask_png(fs::path(a.out) / "mask.png", target->mask);
  if (c.format == "machine")
    out << Json{{"grasps", target->grasps.size()}, {"out", a.out}}.dump() << "\n";
  else
    out << "rendered " << target->grasps.size() << " grasp(s) to " << a.out << "\n";
  return 0;
}

struct DecodeArgs {
  std::string maps, out;
  std::size_t top_n = 5;
  double max_width = kDefaultMaxWidth;
  PeakConfig peaks;
};

int run_decode(const DecodeArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  if (a.top_n < 1) throw UsageError("--top-n must be at least 1");
  provenance(err, c.seed,
             "decode;top_n=" + std::to_string(a.top_n) + ";max_width=" + fmt(a.max_width, "%.6g") +
                 ";threshold=" + fmt(a.peaks.threshold, "%.6g") + ";min_distance=" + fmt(a.peaks.min_distance, "%.6g"));
  const fs::path dir = a.maps;
  const GraspMaps maps =
      import_map_images({read_gray_png(dir / "quality.png"), read_gray_png(dir / "angle.png"), read_gray_png(dir / "width.png")});
  const auto grasps = decode_grasps(maps, a.top_n, a.max_width, a.peaks);
  Json list = Json::array();
  for (const auto& g : grasps) list.push_back(grasp_to_json(g));
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    f << list.dump(2) << "\n";
  }
  if (c.format == "machine") {
    out << list.dump(2) << "\n";
  } else {
    out << "rank        x        y    angle    width   height\n";
    for (std::size_t i = 0; i < grasps.size(); ++i) {
      const auto& g = grasps[i];
      char buf[128];
      std::snprintf(buf, sizeof buf, "%4zu %8.2f %8.2f %8.4f %8.2f %8.2f\n", i + 1, g.center().x, g.center().y, g.angle(),
                    g.width(), g.height());
      out << buf;
    }
    if (grasps.empty()) out << "no grasp found\n";
  }
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Referring grasp benchmark toolkit: build, validate and score language-mask-grasp tuples"};
  app.name("refgrasp");
  app.require_subcommand(1, 1);
  Common common;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate referring expressions from scene graphs");
  g->add_option("--dataset", gen.dataset, "Input: canonical dataset or OCID-like tree (env " + std::string(kDatasetEnvVar) + ")");
  g->add_option("--out", gen.out, "Output dataset root")->required();
  g->add_option("--input-format", gen.input_format, "Input layout")->check(CLI::IsMember({"auto", "canonical", "ocid"}));
  add_families(g, gen.families);
  g->add_option("--quota", gen.quotas, "Per-target quota override, e.g. relation=3 (repeatable)");
  g->add_option("--max-per-scene", gen.max_per_scene, "Cap on expressions per scene (0 = none)");
  g->add_option("--max-tokens", gen.max_tokens, "Longest expression in words");
  add_seed(g, common);
  add_threads(g, common);
  add_format(g, common);

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Write a synthetic dataset and/or oracle predictions");
  s->add_option("--out", syn.out, "Output dataset root");
  s->add_option("--dataset", syn.dataset, "Existing dataset for --predictions when --out is not given");
  s->add_option("--scenes", syn.scenes, "Number of scenes");
  s->add_option("--min-objects", syn.scene.min_objects, "Fewest objects per scene");
  s->add_option("--max-objects", syn.scene.max_objects, "Most objects per scene");
  s->add_option("--height", syn.scene.height, "Image height");
  s->add_option("--width", syn.scene.width, "Image width");
  s->add_option("--min-grasps", syn.scene.min_grasps, "Fewest grasps per object");
  s->add_option("--max-grasps", syn.scene.max_grasps, "Most grasps per object");
  add_families(s, syn.families);
  s->add_option("--max-per-scene", syn.max_per_scene, "Cap on expressions per scene (0 = none)");
  s->add_option("--predictions", syn.predictions, "Write oracle predictions (JSONL) here");
  s->add_option("--erode", syn.noise.erosion_radius, "Mask erosion radius (px)");
  s->add_option("--dilate", syn.noise.dilation_radius, "Mask dilation radius (px)");
  s->add_option("--center-jitter", syn.noise.center_jitter_px, "Grasp centre jitter (px)");
  s->add_option("--angle-jitter", syn.angle_jitter_deg, "Grasp angle jitter (degrees)");
  s->add_option("--angle-offset", syn.angle_offset_deg, "Constant grasp angle offset (degrees)");
  s->add_option("--width-jitter", syn.noise.width_scale_jitter, "Relative grasp size jitter");
  s->add_option("--substitute", syn.noise.substitution_probability, "Wrong-object substitution probability");
  add_seed(s, common);
  add_threads(s, common);
  add_format(s, common);

  std::string validate_dataset;
  auto* v = app.add_subcommand("validate", "Check a dataset and its tuples");
  v->add_option("--dataset", validate_dataset, "Dataset root");
  add_threads(v, common);
  add_format(v, common);

  std::string stats_dataset;
  auto* st = app.add_subcommand("stats", "Dataset statistics");
  st->add_option("--dataset", stats_dataset, "Dataset root");
  add_threads(st, common);
  add_format(st, common);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score predictions");
  e->add_option("--dataset", ev.dataset, "Dataset root");
  e->add_option("--predictions", ev.predictions, "Prediction JSONL file")->required();
  e->add_option("--out", ev.out, "Write the full report (JSON) here");
  e->add_option("--split", ev.split, "Split to score")->check(CLI::IsMember({"train", "val", "test", "all"}));
  add_families(e, ev.families);
  e->add_option("--top-n", ev.top_n, "Grasp predictions considered for J@Any")->check(CLI::PositiveNumber);
  e->add_flag("--no-masks", ev.no_masks, "Skip mask metrics");
  e->add_flag("--no-grasps", ev.no_grasps, "Skip grasp metrics");
  e->add_option("--max-width", ev.max_width, "Width normalization for map predictions");
  add_threads(e, common);
  add_format(e, common);

  RenderArgs rn;
  auto* r = app.add_subcommand("render-maps", "Render ground-truth grasp maps for one object");
  r->add_option("--dataset", rn.dataset, "Dataset root");
  r->add_option("--out", rn.out, "Output directory")->required();
  r->add_option("--tuple", rn.tuple, "Tuple id");
  r->add_option("--scene", rn.scene, "Scene id (with --object)");
  r->add_option("--object", rn.object, "Object id");
  r->add_option("--max-width", rn.max_width, "Width normalization");
  add_format(r, common);

  DecodeArgs dc;
  auto* d = app.add_subcommand("decode", "Decode grasps from map images");
  d->add_option("--maps", dc.maps, "Directory with quality.png, angle.png, width.png")->required();
  d->add_option("--out", dc.out, "Write decoded grasps (JSON) here");
  d->add_option("--top-n", dc.top_n, "Grasps to decode");
  d->add_option("--max-width", dc.max_width, "Width normalization");
  d->add_option("--threshold", dc.peaks.threshold, "Peak threshold on Q");
  d->add_option("--min-distance", dc.peaks.min_distance, "Minimum peak separation (px)");
  add_format(d, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return 2;
  }

  try {
    if (g->parsed()) return run_generate(gen, common, out, err);
    if (s->parsed()) return run_synth(syn, common, out, err);
    if (v->parsed()) return run_validate(validate_dataset, common, out, err);
    if (st->parsed()) return run_stats(stats_dataset, common, out, err);
    if (e->parsed()) return run_evaluate(ev, common, out, err);
    if (r->parsed()) return run_render(rn, common, out, err);
    if (d->parsed()) return run_decode(dc, common, out, err);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << "\n" << "Run with --help for usage.\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace refgrasp
