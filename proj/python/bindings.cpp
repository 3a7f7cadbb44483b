#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "refgrasp/cli.hpp"
#include "refgrasp/dataset.hpp"
#include "refgrasp/metrics.hpp"
#include "refgrasp/synth.hpp"

namespace py = pybind11;
using namespace refgrasp;

namespace {

using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mask mask_from_array(const BoolArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("mask must be a 2-D array");
  Mask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  auto r = a.unchecked<2>();
  for (py::ssize_t y = 0; y < a.shape(0); ++y)
    for (py::ssize_t x = 0; x < a.shape(1); ++x)
      if (r(y, x)) m.set(static_cast<int>(x), static_cast<int>(y));
  return m;
}

DoubleArray to_array(const std::vector<double>& v, int h, int w) {
  DoubleArray out({h, w});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> from_array(const DoubleArray& a, int& h, int& w) {
  if (a.ndim() != 2) throw std::invalid_argument("maps must be 2-D arrays");
  h = static_cast<int>(a.shape(0));
  w = static_cast<int>(a.shape(1));
  return {a.data(), a.data() + a.size()};
}

py::dict scene_to_dict(const SceneGraph& s) {
  py::list objects;
  for (const auto& o : s.objects) {
    py::dict d;
    d["id"] = o.id;
    d["category"] = o.category;
    d["instance_name"] = o.instance_name;
    d["color"] = o.color;
    d["instance_attribute"] = o.instance_attribute;
    d["centroid"] = o.centroid ? py::make_tuple(o.centroid->x, o.centroid->y) : py::object(py::none());
    d["depth_m"] = o.depth_m;
    d["bbox"] = py::make_tuple(o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h);
    d["grasps"] = o.grasps;
    objects.append(d);
  }
  py::list relations;
  for (const auto& e : s.relations)
    relations.append(py::make_tuple(e.subject_id, std::string(to_string(e.predicate)), e.object_id));
  py::list locations;
  for (const auto& l : s.locations) locations.append(py::make_tuple(l.object_id, std::string(to_string(l.label)), l.scope));
  py::dict d;
  d["scene_id"] = s.scene_id;
  d["height"] = s.height;
  d["width"] = s.width;
  d["objects"] = objects;
  d["relations"] = relations;
  d["locations"] = locations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Referring grasp benchmark toolkit (C++ core)";
  m.attr("DEFAULT_SEED") = kDefaultSeed;
  m.attr("DEFAULT_MAX_WIDTH") = kDefaultMaxWidth;

  py::class_<GraspRectangle>(m, "GraspRectangle")
      .def(py::init([](double x, double y, double angle, double width, double height) {
             return GraspRectangle({x, y}, angle, width, height);
           }),
           py::arg("x"), py::arg("y"), py::arg("angle"), py::arg("width"), py::arg("height"))
      .def_property_readonly("x", [](const GraspRectangle& g) { return g.center().x; })
      .def_property_readonly("y", [](const GraspRectangle& g) { return g.center().y; })
      .def_property_readonly("angle", &GraspRectangle::angle)
      .def_property_readonly("width", &GraspRectangle::width)
      .def_property_readonly("height", &GraspRectangle::height)
      .def("corners",
           [](const GraspRectangle& g) {
             std::vector<std::pair<double, double>> out;
             for (const auto& p : rect_corners(g)) out.emplace_back(p.x, p.y);
             return out;
           })
      .def("__eq__", [](const GraspRectangle& a, const GraspRectangle& b) { return a == b; })
      .def("__repr__", [](const GraspRectangle& g) {
        std::ostringstream s;
        s << "GraspRectangle(x=" << g.center().x << ", y=" << g.center().y << ", angle=" << g.angle()
          << ", width=" << g.width() << ", height=" << g.height() << ")";
        return s.str();
      });

  m.def("normalize_grasp_angle", &normalize_grasp_angle);
  m.def("rect_iou", &rect_iou);
  m.def("angle_difference_deg", &angle_difference_deg);
  m.def("rect_from_corners", [](const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() != 4) throw std::invalid_argument("expected four corners");
    Quad q;
    for (std::size_t i = 0; i < 4; ++i) q[i] = {pts[i].first, pts[i].second};
    return rect_from_corners(q);
  });
  m.def("import_corner_grasps", [](const std::string& text) { return import_corner_grasps(text); });

  m.def(
      "render_grasp_maps",
      [](const std::vector<GraspRectangle>& grasps, int height, int width, double max_width) {
        const GraspMaps maps = render_grasp_maps(grasps, height, width, max_width);
        return py::make_tuple(to_array(maps.quality, height, width), to_array(maps.angle, height, width),
                              to_array(maps.width_map, height, width));
      },
      py::arg("grasps"), py::arg("height"), py::arg("width"), py::arg("max_width") = kDefaultMaxWidth,
      "Returns (quality, angle, width) arrays.");
  m.def(
      "decode_grasps",
      [](const DoubleArray& quality, const DoubleArray& angle, const DoubleArray& width, std::size_t n,
         double max_width, double threshold, double min_distance) {
        GraspMaps maps;
        int h = 0, w = 0, h2 = 0, w2 = 0, h3 = 0, w3 = 0;
        maps.quality = from_array(quality, h, w);
        maps.angle = from_array(angle, h2, w2);
        maps.width_map = from_array(width, h3, w3);
        if (h != h2 || h != h3 || w != w2 || w != w3) throw std::invalid_argument("map shapes differ");
        maps.height = h;
        maps.width = w;
        PeakConfig peaks;
        peaks.threshold = threshold;
        peaks.min_distance = min_distance;
        return decode_grasps(maps, n, max_width, peaks);
      },
      py::arg("quality"), py::arg("angle"), py::arg("width"), py::arg("n") = 1, py::arg("max_width") = kDefaultMaxWidth,
      py::arg("threshold") = PeakConfig{}.threshold, py::arg("min_distance") = PeakConfig{}.min_distance);

  m.def("ris_iou", [](const BoolArray& pred, const BoolArray& gt) { return ris_iou(mask_from_array(pred), mask_from_array(gt)); });
  m.def("precision_at", [](const std::vector<double>& ious, double x) { return precision_at(ious, x); });
  m.def(
      "grasp_success",
      [](const std::vector<GraspRectangle>& preds, const std::vector<GraspRectangle>& gts, std::size_t n) {
        return grasp_success(preds, gts, n);
      },
      py::arg("preds"), py::arg("gts"), py::arg("n") = 1);

  m.def(
      "planar_predicate",
      [](double dx, double dy, double offset) { return std::string(to_string(planar_predicate({dx, dy}, offset))); },
      py::arg("dx"), py::arg("dy"), py::arg("sector_offset_deg") = 0.0,
      "Predicate of a subject displaced by (dx, dy) from its reference, in image coordinates.");
  m.def(
      "synthetic_scene",
      [](std::uint64_t seed, int min_objects, int max_objects) {
        SynthConfig cfg;
        cfg.min_objects = min_objects;
        cfg.max_objects = max_objects;
        return scene_to_dict(generate_synthetic_scene(cfg, seed));
      },
      py::arg("seed") = kDefaultSeed, py::arg("min_objects") = 3, py::arg("max_objects") = 8);

  m.def("default_catalog_json", []() { return catalog_to_json(default_catalog()).dump(2); });
  m.def(
      "dataset_stats_json",
      [](const std::string& root, unsigned threads) { return stats_to_json(compute_stats(load_dataset(root, threads))).dump(); },
      py::arg("root"), py::arg("threads") = 1);
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");

  py::register_exception<DatasetError>(m, "DatasetError", PyExc_RuntimeError);
  py::register_exception<MetricsError>(m, "MetricsError", PyExc_RuntimeError);
  py::register_exception<SynthError>(m, "SynthError", PyExc_RuntimeError);
}
