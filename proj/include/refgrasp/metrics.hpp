#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "refgrasp/dataset.hpp"
#include "refgrasp/grasp.hpp"
#include "refgrasp/mask.hpp"

namespace refgrasp {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<double, 5> kPrecisionThresholds = {0.5, 0.6, 0.7, 0.8, 0.9};
inline constexpr double kGraspAngleToleranceDeg = 30.0;
inline constexpr double kGraspIouThreshold = 0.25;  // strict
inline constexpr std::size_t kDefaultGraspCap = 25;

/// |pred & gt| / |pred | gt|; 1 when both are empty. Throws MetricsError on a
/// size mismatch.
double ris_iou(const Mask& pred, const Mask& gt);

/// Percentage of ious strictly above x. Throws MetricsError for an empty list.
double precision_at(std::span<const double> ious, double x);

/// Any of the first n predictions within 30 degrees and above 0.25 rect IoU
/// of any ground-truth rectangle. Throws std::invalid_argument for empty gt.
bool grasp_success(std::span<const GraspRectangle> preds, std::span<const GraspRectangle> gts, std::size_t n);

struct Prediction {
  std::string tuple_id;
  std::optional<Mask> mask;
  std::optional<std::vector<GraspRectangle>> grasps;  // confidence-descending
  std::vector<double> confidences;                    // parallel to grasps when present
  std::optional<GraspMaps> maps;                      // decoded when grasps are absent
};

/// Prediction JSONL, one record per line:
///   {"tuple_id": ..., "mask": "<png path>" | {"rle": {"height","width","counts"}},
///    "grasps": [{"x","y","angle","width","height","confidence"}, ...],
///    "maps": {"quality": png, "angle": png, "width": png}}
/// Relative paths resolve against the file's directory. Grasps are sorted by
/// descending confidence (stable). Duplicate tuple ids are an error.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

/// Writes masks as inline RLE; deterministic bytes.
void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

struct EvalOptions {
  bool masks = true;
  bool grasps = true;
  std::size_t grasp_cap = kDefaultGraspCap;  // predictions considered for J@Any
  std::optional<Split> split;                // all tuples when unset
  std::vector<Family> families = {kAllFamilies.begin(), kAllFamilies.end()};
  double max_width = kDefaultMaxWidth;       // for decoding map predictions
  PeakConfig peaks;
  unsigned threads = 1;
};

struct SampleScore {
  std::string tuple_id;
  Family family = Family::Name;
  bool has_mask = false;        // a predicted mask was supplied
  double iou = 0.0;
  bool grasp_scored = false;    // target has ground-truth grasps
  std::size_t grasps_considered = 0;
  bool j1 = false;
  bool j_any = false;
};

struct MetricSummary {
  std::size_t samples = 0;
  std::size_t grasp_samples = 0;
  double mean_iou = 0.0;  // percentages from here on
  std::array<double, 5> precision{};
  double j_at_1 = 0.0;
  double j_at_any = 0.0;
};

struct EvalReport {
  MetricSummary overall;
  std::map<Family, MetricSummary> per_family;
  std::vector<SampleScore> samples;  // dataset tuple order
  bool masks = true;
  bool grasps = true;
};

/// Scores predictions against the dataset's tuples. Tuples without a
/// prediction score zero. Throws MetricsError naming unknown tuple ids.
EvalReport evaluate(const std::vector<Prediction>& predictions, const Dataset& dataset, const EvalOptions& options = {});

MetricSummary summarize(std::span<const SampleScore> samples);

nlohmann::json report_to_json(const EvalReport& report);
std::string format_report_table(const EvalReport& report);

}  // namespace refgrasp
