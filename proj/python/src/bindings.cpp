#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "opstage/error.hpp"
#include "opstage/glcm.hpp"
#include "opstage/harness.hpp"
#include "opstage/image.hpp"
#include "opstage/json_io.hpp"
#include "opstage/staging.hpp"
#include "opstage/wbls.hpp"

namespace py = pybind11;
using namespace opstage;

namespace {

using PixelArray = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const PixelArray& pixels, int levels) {
  if (pixels.ndim() != 2) throw Error(ErrorKind::ShapeError, "pixels must be a 2-D array");
  const auto* data = pixels.data();
  std::vector<std::uint16_t> px(data, data + pixels.size());
  return GrayImage(static_cast<int>(pixels.shape(1)), static_cast<int>(pixels.shape(0)), levels,
                   std::move(px));
}

py::array_t<std::uint16_t> to_array(const GrayImage& img) {
  py::array_t<std::uint16_t> out({img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

py::dict stats_dict(const TextureStats& s) {
  py::dict d;
  d["energy"] = s.energy;
  d["entropy"] = s.entropy;
  d["inverse_variance"] = s.inverse_variance;
  d["contrast"] = s.contrast;
  return d;
}

py::object json_to_py(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return nlohmann::json::parse(obj.cast<std::string>());
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

}  // namespace

PYBIND11_MODULE(_opstage, m) {
  m.doc() = "GLCM texture features, weighted broad learning classifier and opacity staging";

  static py::exception<Error> base_error(m, "OpstageError", PyExc_ValueError);
  static py::exception<Error> numeric_error(m, "NumericError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NumericError) {
        py::set_error(numeric_error, e.what());
      } else {
        py::set_error(base_error, e.what());
      }
    } catch (const nlohmann::json::exception& e) {
      py::set_error(base_error, e.what());
    }
  });

  m.def(
      "quantize",
      [](py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast> values,
         std::uint32_t max_value, int levels) {
        if (values.ndim() != 2) throw Error(ErrorKind::ShapeError, "values must be a 2-D array");
        RawRaster raster;
        raster.height = static_cast<int>(values.shape(0));
        raster.width = static_cast<int>(values.shape(1));
        raster.max_value = max_value;
        raster.values.assign(values.data(), values.data() + values.size());
        return to_array(quantize_image(raster, max_value, levels));
      },
      py::arg("values"), py::arg("max_value"), py::arg("levels"));

  m.def(
      "read_pgm",
      [](const std::string& path, int levels) {
        const RawRaster raw = read_pgm(path);
        return to_array(quantize_image(raw, raw.max_value, levels));
      },
      py::arg("path"), py::arg("levels") = 16, "Read a PGM file and quantize it to `levels` gray levels.");

  m.def(
      "glcm",
      [](const PixelArray& pixels, int levels, int dx, int dy) {
        const Glcm g = compute_glcm(to_image(pixels, levels), {dx, dy});
        py::array_t<std::uint64_t> out({levels, levels});
        auto view = out.mutable_unchecked<2>();
        for (int a = 0; a < levels; ++a)
          for (int b = 0; b < levels; ++b) view(a, b) = g.count(a, b);
        return out;
      },
      py::arg("pixels"), py::arg("levels"), py::arg("dx") = 1, py::arg("dy") = 0);

  m.def(
      "texture_stats",
      [](const PixelArray& pixels, int levels, int dx, int dy) {
        return stats_dict(texture_stats(normalize_glcm(compute_glcm(to_image(pixels, levels), {dx, dy}))));
      },
      py::arg("pixels"), py::arg("levels"), py::arg("dx") = 1, py::arg("dy") = 0);

  m.def(
      "feature_vector",
      [](const PixelArray& pixels, int levels) {
        const FeatureVector f = feature_vector(to_image(pixels, levels));
        return std::vector<double>(f.begin(), f.end());
      },
      py::arg("pixels"), py::arg("levels"));

  py::class_<WblsModel>(m, "Model")
      .def_property_readonly("class_names", &WblsModel::class_names)
      .def_property_readonly("input_dim", &WblsModel::input_dim)
      .def_property_readonly("output_weights", &WblsModel::output_weights)
      .def(
          "predict",
          [](const WblsModel& model, const Matrix& x) {
            Prediction p = model.predict(x);
            return py::make_tuple(p.classes, p.scores);
          },
          py::arg("x"), "Return (class indices, score matrix).")
      .def("serialize", &WblsModel::serialize)
      .def_static("deserialize", [](const std::string& text) { return WblsModel::deserialize(text); })
      .def("save", [](const WblsModel& model, const std::string& path) { model.save(path); })
      .def_static("load", [](const std::string& path) { return WblsModel::load(path); });

  m.def(
      "train",
      [](const Matrix& x, const std::vector<int>& labels, int feature_nodes, int enhancement_nodes,
         double lambda, std::uint64_t seed, bool weighted, std::vector<std::string> class_names) {
        WblsHyperParams hp;
        hp.feature_nodes = feature_nodes;
        hp.enhancement_nodes = enhancement_nodes;
        hp.lambda = lambda;
        hp.seed = seed;
        hp.weighted = weighted;
        py::gil_scoped_release release;
        return train(x, labels, hp, std::move(class_names));
      },
      py::arg("x"), py::arg("labels"), py::arg("feature_nodes") = 10, py::arg("enhancement_nodes") = 10,
      py::arg("lambda_") = 1e-3, py::arg("seed") = 0, py::arg("weighted") = true,
      py::arg("class_names") = std::vector<std::string>{});

  m.def(
      "majority_vote",
      [](const std::vector<int>& votes) {
        std::vector<OpacityLevel> levels;
        for (int v : votes) levels.push_back(opacity_level_from_int(v));
        return static_cast<int>(majority_vote(levels));
      },
      py::arg("votes"));

  m.def(
      "final_stage",
      [](const std::vector<int>& levels, bool large_opacities) {
        if (levels.size() != kSubRegions.size()) {
          throw Error(ErrorKind::InvalidArgument, "expected one level per sub-region (6)");
        }
        ChestAssessment a;
        for (std::size_t i = 0; i < levels.size(); ++i) a.levels[i] = opacity_level_from_int(levels[i]);
        a.large_opacities = large_opacities;
        return std::string(to_string(determine_final_stage(a)));
      },
      py::arg("levels"), py::arg("large_opacities") = false,
      "Levels in the order left-top, left-middle, left-bottom, right-top, right-middle, right-bottom.");

  m.def(
      "stage_assessment",
      [](const py::object& doc) { return std::string(to_string(determine_final_stage(assessment_from_json(py_to_json(doc))))); },
      py::arg("assessment"), "Stage an assessment given as a dict or JSON text.");

  m.def(
      "run_experiment",
      [](const py::object& config, const std::string& base_dir) {
        const ExperimentConfig cfg = ExperimentConfig::from_json(py_to_json(config), base_dir);
        nlohmann::json report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg).to_json();
        }
        return json_to_py(report);
      },
      py::arg("config"), py::arg("base_dir") = "", "Run a repeated experiment and return the report as a dict.");
}
