// pybind11 bindings. Images and flows cross the boundary as float64 numpy
// arrays of shape (H, W, C); a 2-D array is read as one channel.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "flowcast/config.hpp"
#include "flowcast/error.hpp"
#include "flowcast/flow_init.hpp"
#include "flowcast/flow_ops.hpp"
#include "flowcast/image_io.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/predictor.hpp"
#include "flowcast/run.hpp"
#include "flowcast/scene.hpp"
#include "flowcast/warp.hpp"

namespace py = pybind11;
namespace fc = flowcast;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

fc::Grid to_grid(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw fc::ShapeError("expected a 2-D or 3-D array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  fc::Grid g(h, w, c);
  std::memcpy(g.values().data(), a.data(), g.size() * sizeof(double));
  return g;
}

Array to_array(const fc::Grid& g) {
  Array a({g.height(), g.width(), g.channels()});
  std::memcpy(a.mutable_data(), g.values().data(), g.size() * sizeof(double));
  return a;
}

py::list to_list(const std::vector<fc::Grid>& grids) {
  py::list out;
  for (const auto& g : grids) out.append(to_array(g));
  return out;
}

std::string option_text(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
  if (py::isinstance<py::tuple>(v) || py::isinstance<py::list>(v)) {
    std::string s;
    for (const auto& item : v) s += (s.empty() ? "" : ",") + py::str(item).cast<std::string>();
    return s;
  }
  return py::str(v).cast<std::string>();
}

// Applies run-config keys (the same names as the config file) to a default
// configuration.
fc::RunConfig run_config(const py::dict& options) {
  fc::RunConfig cfg;
  for (const auto& [k, v] : options) cfg.set(k.cast<std::string>(), option_text(v));
  return cfg;
}

py::dict prediction_dict(const fc::Prediction& p) {
  Array trace({static_cast<py::ssize_t>(p.trace.records.size()), py::ssize_t{3}});
  auto t = trace.mutable_unchecked<2>();
  for (std::size_t i = 0; i < p.trace.records.size(); ++i) {
    t(i, 0) = p.trace.records[i].total;
    t(i, 1) = p.trace.records[i].img;
    t(i, 2) = p.trace.records[i].cons;
  }
  py::dict d;
  d["frame"] = to_array(p.frame);
  d["flow"] = to_array(p.flow);
  d["trace"] = trace;
  d["final_loss"] = py::make_tuple(p.final_loss.total, p.final_loss.img, p.final_loss.cons);
  return d;
}

py::dict metrics_dict(const fc::FrameMetrics& m) {
  py::dict d;
  d["frame"] = m.index;
  d["psnr"] = m.psnr;
  d["ssim"] = m.ssim;
  d["ms_ssim"] = m.ms_ssim;
  d["epe"] = m.epe ? py::cast(*m.epe) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_flowcast, m) {
  m.doc() = "Future-frame prediction by test-time flow optimisation";

  py::register_exception<fc::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<fc::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<fc::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<fc::PredictionDiverged>(m, "PredictionDiverged", PyExc_ArithmeticError);
  py::register_exception<fc::DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  m.def("config_keys", &fc::config_keys);

  m.def(
      "predict_next",
      [](const Array& prev, const Array& curr, const py::dict& options) {
        const fc::PredictorConfig cfg = run_config(options).predictor;
        const fc::Grid a = to_grid(prev), b = to_grid(curr);
        fc::Prediction p;
        {
          py::gil_scoped_release release;
          p = fc::predict_next(a, b, cfg);
        }
        return prediction_dict(p);
      },
      py::arg("prev"), py::arg("curr"), py::arg("options") = py::dict(),
      "Predicts the frame after `curr`. `options` takes run-config keys, e.g. {'iterations': 300}.");

  m.def(
      "predict_sequence",
      [](const Array& prev, const Array& curr, int horizon, const py::dict& options) {
        const fc::PredictorConfig cfg = run_config(options).predictor;
        const fc::Grid a = to_grid(prev), b = to_grid(curr);
        std::vector<fc::Prediction> seq;
        {
          py::gil_scoped_release release;
          seq = fc::predict_sequence(a, b, horizon, cfg);
        }
        py::list out;
        for (const auto& p : seq) out.append(prediction_dict(p));
        return out;
      },
      py::arg("prev"), py::arg("curr"), py::arg("horizon"), py::arg("options") = py::dict());

  m.def(
      "generate_scene",
      [](const py::dict& options) {
        py::dict opts = options;
        if (!opts.contains("scene")) opts["scene"] = "translate";
        const fc::RunConfig cfg = run_config(opts);
        if (!cfg.scene) throw fc::ConfigError("generate_scene needs a scene kind");
        const fc::Scene s = fc::generate_scene(*cfg.scene);
        py::dict d;
        d["frames"] = to_list(s.frames);
        d["forward_flows"] = to_list(s.forward_flows);
        d["backward_flows"] = to_list(s.backward_flows);
        d["max_displacement"] = cfg.scene->max_displacement();
        return d;
      },
      py::arg("options") = py::dict(),
      "Synthetic sequence. Keys: scene, scene_height, scene_width, scene_channels, scene_seed, "
      "scene_frames, velocity, angular_rate, fg_velocity, fg_radius.");

  m.def(
      "run",
      [](const py::dict& options) {
        const fc::RunConfig cfg = run_config(options);
        fc::RunResult r;
        {
          py::gil_scoped_release release;
          r = fc::execute(cfg);
        }
        py::dict d;
        py::list metrics;
        for (const auto& f : r.metrics.frames) metrics.append(metrics_dict(f));
        d["metrics"] = metrics;
        d["margin"] = r.metrics.margin;
        d["written"] = r.written;
        return d;
      },
      py::arg("options"), "Runs a full configuration and writes its outputs, like the CLI.");

  m.def("psnr", [](const Array& a, const Array& b, int margin) { return fc::psnr(to_grid(a), to_grid(b), margin); },
        py::arg("a"), py::arg("b"), py::arg("margin") = 0);
  m.def("ssim", [](const Array& a, const Array& b) { return fc::ssim(to_grid(a), to_grid(b)); });
  m.def("ms_ssim", [](const Array& a, const Array& b) { return fc::ms_ssim(to_grid(a), to_grid(b)); });
  m.def("mean_epe",
        [](const Array& f, const Array& t, int margin) { return fc::mean_epe(to_grid(f), to_grid(t), margin); },
        py::arg("flow"), py::arg("truth"), py::arg("margin") = 0);
  m.def("flow_to_color",
        [](const Array& f, double max_magnitude) { return to_array(fc::flow_to_color(to_grid(f), max_magnitude)); },
        py::arg("flow"), py::arg("max_magnitude"));

  m.def(
      "estimate_flow",
      [](const Array& a, const Array& b) { return to_array(fc::estimate_flow(to_grid(a), to_grid(b))); },
      "Flow with a(p) ~ b(p + flow(p)).");
  m.def(
      "init_prediction_flow",
      [](const Array& prev, const Array& curr, const std::string& init, std::uint64_t seed) {
        return to_array(fc::init_prediction_flow(to_grid(prev), to_grid(curr), {},
                                                 fc::parse_init_mode(init), seed));
      },
      py::arg("prev"), py::arg("curr"), py::arg("init") = "flow", py::arg("seed") = 0);
  m.def("reverse_flow", [](const Array& f) {
    const fc::ReversedFlow r = fc::reverse_flow(to_grid(f));
    return py::make_tuple(to_array(r.flow), to_array(r.holes));
  });
  m.def("inpaint_flow",
        [](const Array& f, const Array& mask) { return to_array(fc::inpaint_flow(to_grid(f), to_grid(mask))); });
  m.def("backward_warp",
        [](const Array& src, const Array& f) { return to_array(fc::backward_warp(to_grid(src), to_grid(f))); });

  m.def("load_image", [](const std::string& path) { return to_array(fc::load_image(path)); });
  m.def("save_png", [](const std::string& path, const Array& img) { fc::save_png(path, to_grid(img)); });
}
