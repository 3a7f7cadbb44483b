#include "refgrasp/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "refgrasp/image_io.hpp"
#include "refgrasp/parallel.hpp"

namespace refgrasp {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Mask mask_from_json(const Json& j, const fs::path& base) {
  if (j.is_string()) {
    fs::path p = j.get<std::string>();
    if (p.is_relative()) p = base / p;
    return read_mask_png(p);
  }
  const Json& r = j.at("rle");
  Rle rle{r.at("height").get<int>(), r.at("width").get<int>(), r.at("counts").get<std::vector<std::uint32_t>>()};
  try {
    return decode_rle(rle);
  } catch (const std::invalid_argument& e) {
    throw MetricsError(std::string("bad RLE mask: ") + e.what());
  }
}

GraspMaps maps_from_json(const Json& j, const fs::path& base) {
  const auto load = [&](const char* key) {
    fs::path p = j.at(key).get<std::string>();
    if (p.is_relative()) p = base / p;
    return read_gray_png(p);
  };
  return import_map_images({load("quality"), load("angle"), load("width")});
}

double percent(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

Json summary_to_json(const MetricSummary& s, bool masks, bool grasps) {
  Json j{{"samples", s.samples}};
  if (masks) {
    j["mean_iou"] = s.mean_iou;
    Json pr = Json::object();
    for (std::size_t i = 0; i < kPrecisionThresholds.size(); ++i)
      pr["pr@" + std::to_string(static_cast<int>(kPrecisionThresholds[i] * 100 + 0.5))] = s.precision[i];
    j["precision"] = pr;
  }
  if (grasps) {
    j["grasp_samples"] = s.grasp_samples;
    j["j@1"] = s.j_at_1;
    j["j@any"] = s.j_at_any;
  }
  return j;
}

}  // namespace

double ris_iou(const Mask& pred, const Mask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width())
    throw MetricsError("mask size " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                       " differs from ground truth " + std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  const std::size_t uni = union_area(pred, gt);
  if (uni == 0) return 1.0;
  return static_cast<double>(intersection_area(pred, gt)) / static_cast<double>(uni);
}

double precision_at(std::span<const double> ious, double x) {
  if (ious.empty()) throw MetricsError("precision over an empty list");
  const auto hits = std::count_if(ious.begin(), ious.end(), [x](double v) { return v > x; });
  return percent(static_cast<std::size_t>(hits), ious.size());
}

bool grasp_success(std::span<const GraspRectangle> preds, std::span<const GraspRectangle> gts, std::size_t n) {
  if (gts.empty()) throw std::invalid_argument("grasp_success needs at least one ground-truth grasp");
  const std::size_t k = std::min(n, preds.size());
  for (std::size_t i = 0; i < k; ++i)
    for (const auto& g : gts)
      if (angle_difference_deg(preds[i].angle(), g.angle()) <= kGraspAngleToleranceDeg &&
          rect_iou(preds[i], g) > kGraspIouThreshold)
        return true;
  return false;
}

std::vector<Prediction> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricsError("cannot read predictions: " + path.string());
  const fs::path base = path.parent_path();
  std::vector<Prediction> out;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + " line " + std::to_string(line_no);
    try {
      const Json j = Json::parse(line);
      Prediction p;
      p.tuple_id = j.at("tuple_id").get<std::string>();
      if (!ids.insert(p.tuple_id).second) throw MetricsError("duplicate prediction for tuple '" + p.tuple_id + "'");
      if (j.contains("mask") && !j.at("mask").is_null()) p.mask = mask_from_json(j.at("mask"), base);
      if (j.contains("grasps") && !j.at("grasps").is_null()) {
        std::vector<std::pair<double, GraspRectangle>> scored;
        for (const auto& g : j.at("grasps"))
          scored.emplace_back(g.value("confidence", 0.0), grasp_from_json(g));
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        p.grasps.emplace();
        for (auto& [c, g] : scored) {
          p.grasps->push_back(g);
          p.confidences.push_back(c);
        }
      }
      if (j.contains("maps") && !j.at("maps").is_null()) p.maps = maps_from_json(j.at("maps"), base);
      if (!p.mask && !p.grasps && !p.maps) throw MetricsError("record has neither mask, grasps nor maps");
      out.push_back(std::move(p));
    } catch (const Json::exception& e) {
      throw MetricsError(where + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw MetricsError(where + ": " + e.what());
    }
  }
  return out;
}

void save_predictions(const fs::path& path, const std::vector<Prediction>& predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MetricsError("cannot write predictions: " + path.string());
  for (const auto& p : predictions) {
    Json j{{"tuple_id", p.tuple_id}};
    if (p.mask) {
      const Rle rle = encode_rle(*p.mask);
      j["mask"] = {{"rle", {{"height", rle.height}, {"width", rle.width}, {"counts", rle.counts}}}};
    }
    if (p.grasps) {
      Json list = Json::array();
      for (std::size_t i = 0; i < p.grasps->size(); ++i) {
        Json g = grasp_to_json((*p.grasps)[i]);
        g["confidence"] = i < p.confidences.size() ? p.confidences[i] : 0.0;
        list.push_back(std::move(g));
      }
      j["grasps"] = std::move(list);
    }
    out << j.dump() << '\n';
  }
  if (!out) throw MetricsError("write failed: " + path.string());
}

MetricSummary summarize(std::span<const SampleScore> samples) {
  MetricSummary s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  std::vector<double> ious;
  ious.reserve(samples.size());
  double sum = 0.0;
  std::size_t j1 = 0, jany = 0;
  for (const auto& x : samples) {
    ious.push_back(x.iou);
    sum += x.iou;
    if (!x.grasp_scored) continue;
    ++s.grasp_samples;
    j1 += x.j1 ? 1 : 0;
    jany += x.j_any ? 1 : 0;
  }
  s.mean_iou = 100.0 * sum / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < kPrecisionThresholds.size(); ++i) s.precision[i] = precision_at(ious, kPrecisionThresholds[i]);
  s.j_at_1 = percent(j1, s.grasp_samples);
  s.j_at_any = percent(jany, s.grasp_samples);
  return s;
}

EvalReport evaluate(const std::vector<Prediction>& predictions, const Dataset& dataset, const EvalOptions& options) {
  std::set<std::string> known;
  for (const auto& e : dataset.tuples) known.insert(e.tuple_id);
  std::map<std::string, const Prediction*> by_id;
  std::vector<std::string> unknown;
  for (const auto& p : predictions) {
    if (!known.count(p.tuple_id)) {
      unknown.push_back(p.tuple_id);
      continue;
    }
    if (!by_id.emplace(p.tuple_id, &p).second) throw MetricsError("duplicate prediction for tuple '" + p.tuple_id + "'");
  }
  if (!unknown.empty()) {
    std::string msg = std::to_string(unknown.size()) + " prediction(s) for unknown tuple ids:";
    for (std::size_t i = 0; i < unknown.size() && i < 10; ++i) msg += " " + unknown[i];
    if (unknown.size() > 10) msg += " ...";
    throw MetricsError(msg);
  }

  const std::set<Family> families(options.families.begin(), options.families.end());
  std::vector<const ReferringExpression*> selected;
  for (const auto& e : dataset.tuples) {
    if (!families.count(e.program.family)) continue;
    if (options.split && dataset.scene(e.scene_id).split != *options.split) continue;
    selected.push_back(&e);
  }

  EvalReport report;
  report.masks = options.masks;
  report.grasps = options.grasps;
  report.samples.resize(selected.size());
  parallel_for(selected.size(), options.threads, [&](std::size_t i) {
    const ReferringExpression& e = *selected[i];
    const ObjectNode& target = dataset.target(e);
    SampleScore& s = report.samples[i];
    s.tuple_id = e.tuple_id;
    s.family = e.program.family;
    const auto it = by_id.find(e.tuple_id);
    const Prediction* p = it == by_id.end() ? nullptr : it->second;

    if (options.masks && p && p->mask) {
      s.has_mask = true;
      try {
        s.iou = ris_iou(*p->mask, target.mask);
      } catch (const MetricsError& err) {
        throw MetricsError("tuple '" + e.tuple_id + "': " + err.what());
      }
    }
    if (options.grasps && !target.grasps.empty()) {
      s.grasp_scored = true;
      std::vector<GraspRectangle> preds;
      if (p && p->grasps) {
        preds = *p->grasps;
      } else if (p && p->maps) {
        preds = decode_grasps(*p->maps, options.grasp_cap, options.max_width, options.peaks);
      }
      if (preds.size() > options.grasp_cap) preds.erase(preds.begin() + static_cast<std::ptrdiff_t>(options.grasp_cap), preds.end());
      s.grasps_considered = preds.size();
      s.j1 = grasp_success(preds, target.grasps, 1);
      s.j_any = grasp_success(preds, target.grasps, preds.size());
    }
  });

  report.overall = summarize(report.samples);
  for (Family f : options.families) {
    std::vector<SampleScore> subset;
    for (const auto& s : report.samples)
      if (s.family == f) subset.push_back(s);
    report.per_family[f] = summarize(subset);
  }
  return report;
}

nlohmann::json report_to_json(const EvalReport& r) {
  Json per_family = Json::object();
  for (const auto& [f, s] : r.per_family) per_family[std::string(to_string(f))] = summary_to_json(s, r.masks, r.grasps);
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json j{{"tuple_id", s.tuple_id}, {"family", std::string(to_string(s.family))}};
    if (r.masks) {
      j["has_mask"] = s.has_mask;
      j["iou"] = s.iou;
    }
    if (r.grasps && s.grasp_scored) {
      j["grasps_considered"] = s.grasps_considered;
      j["j@1"] = s.j1;
      j["j@any"] = s.j_any;
    }
    samples.push_back(std::move(j));
  }
  return {{"overall", summary_to_json(r.overall, r.masks, r.grasps)}, {"per_family", per_family}, {"samples", samples}};
}

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %8s", "family", "samples");
  out << buf;
  if (r.masks) {
    std::snprintf(buf, sizeof buf, " %7s %7s %7s %7s %7s %7s", "IoU", "Pr@50", "Pr@60", "Pr@70", "Pr@80", "Pr@90");
    out << buf;
  }
  if (r.grasps) {
    std::snprintf(buf, sizeof buf, " %7s %7s", "J@1", "J@Any");
    out << buf;
  }
  out << '\n';
  const auto row = [&](const std::string& name, const MetricSummary& s) {
    std::snprintf(buf, sizeof buf, "%-10s %8zu", name.c_str(), s.samples);
    out << buf;
    if (r.masks) {
      std::snprintf(buf, sizeof buf, " %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f", s.mean_iou, s.precision[0], s.precision[1],
                    s.precision[2], s.precision[3], s.precision[4]);
      out << buf;
    }
    if (r.grasps) {
      std::snprintf(buf, sizeof buf, " %7.2f %7.2f", s.j_at_1, s.j_at_any);
      out << buf;
    }
    out << '\n';
  };
  for (const auto& [f, s] : r.per_family) row(std::string(to_string(f)), s);
  row("overall", r.overall);
  return out.str();
}

}  // namespace refgrasp
