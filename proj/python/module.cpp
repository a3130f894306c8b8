#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>

#include "votepose/error.hpp"
#include "votepose/io.hpp"
#include "votepose/metrics.hpp"
#include "votepose/mrf.hpp"
#include "votepose/pipeline.hpp"
#include "votepose/selftest.hpp"
#include "votepose/synth.hpp"
#include "votepose/voting.hpp"

namespace py = pybind11;
using namespace votepose;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

VoterField to_field(const FloatArray& a, int keypoint, int stride) {
  if (a.ndim() != 3) throw InvalidArgument("voter field must be a (rows, cols, classes) array");
  VoterField f(keypoint, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), stride, static_cast<int>(a.shape(2)));
  std::memcpy(f.values.data(), a.data(), f.values.size() * sizeof(float));
  return f;
}

FloatArray from_field(const VoterField& f) {
  FloatArray out({f.rows, f.cols, f.num_classes});
  std::memcpy(out.mutable_data(), f.values.data(), f.values.size() * sizeof(float));
  return out;
}

py::tuple from_heatmap(const Heatmap& h) {
  DoubleArray out({h.values.rows(), h.values.cols()});
  std::memcpy(out.mutable_data(), h.values.data().data(), h.values.size() * sizeof(double));
  return py::make_tuple(out, py::make_tuple(h.origin.row, h.origin.col));
}

// (n, 2) array of x, y with NaN rows for missing points.
DoubleArray from_keypoints(const KeypointSet& s) {
  DoubleArray out({static_cast<py::ssize_t>(s.size()), py::ssize_t{2}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto n = static_cast<py::ssize_t>(i);
    m(n, 0) = s[i] ? s[i]->x : std::numeric_limits<double>::quiet_NaN();
    m(n, 1) = s[i] ? s[i]->y : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

KeypointSet to_keypoints(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw InvalidArgument("keypoints must be an (n, 2) array of x, y");
  KeypointSet out(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    if (!std::isnan(r(i, 0)) && !std::isnan(r(i, 1))) out[static_cast<std::size_t>(i)] = Point{r(i, 0), r(i, 1)};
  }
  return out;
}

EnergyModel to_model(const std::vector<DoubleArray>& unaries, const std::vector<std::tuple<int, int, DoubleArray>>& edges) {
  EnergyModel m;
  for (const auto& u : unaries) {
    if (u.ndim() != 1) throw InvalidArgument("unary costs must be 1-d");
    m.add_node(std::vector<double>(u.data(), u.data() + u.size()));
  }
  for (const auto& [a, b, t] : edges) {
    if (t.ndim() != 2) throw InvalidArgument("edge costs must be 2-d");
    Grid<double> g(static_cast<int>(t.shape(0)), static_cast<int>(t.shape(1)));
    std::memcpy(g.data().data(), t.data(), g.size() * sizeof(double));
    m.add_edge(a, b, std::move(g));
  }
  m.validate();
  return m;
}

py::dict from_labeling(const Labeling& l) {
  py::dict d;
  d["labels"] = l.labels;
  d["energy"] = l.energy;
  d["lower_bound"] = l.lower_bound;
  d["converged"] = l.converged;
  d["iterations"] = l.iterations;
  return d;
}

RunConfig parse_config(const std::optional<std::string>& text) {
  return text ? config_from_json(nlohmann::json::parse(*text)) : RunConfig{};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keypoint-voting pose inference";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NoEvidence>(m, "NoEvidence", PyExc_RuntimeError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<LogPolarGrid>(m, "LogPolarGrid")
      .def(py::init<>())
      .def_readwrite("num_rings", &LogPolarGrid::num_rings)
      .def_readwrite("angular_bins", &LogPolarGrid::angular_bins)
      .def_readwrite("ring_boundaries", &LogPolarGrid::ring_boundaries)
      .def_readwrite("angular_offset", &LogPolarGrid::angular_offset)
      .def_property_readonly("num_classes", &LogPolarGrid::num_classes)
      .def("validate", &LogPolarGrid::validate)
      .def("__eq__", [](const LogPolarGrid& a, const LogPolarGrid& b) { return a == b; });

  m.def("bin_of", [](int drow, int dcol, const LogPolarGrid& g) { return bin_of({drow, dcol}, g); }, py::arg("drow"),
        py::arg("dcol"), py::arg("grid") = LogPolarGrid{}, "Class of the displacement (drow, dcol) from a voter.");

  m.def(
      "build_kernel",
      [](const LogPolarGrid& g, std::optional<int> size) {
        const int s = size.value_or(default_kernel_size(g));
        const VoteKernel k = build_kernel(g, s, s);
        DoubleArray out({k.rows(), k.cols(), k.channels()});
        std::memcpy(out.mutable_data(), k.dense().data(), k.dense().size() * sizeof(double));
        return out;
      },
      py::arg("grid") = LogPolarGrid{}, py::arg("size") = py::none(),
      "Dense (size, size, classes) vote kernel.");

  auto aggregator = [](auto fn) {
    return [fn](const FloatArray& field, const LogPolarGrid& g, std::optional<int> size) {
      const int s = size.value_or(default_kernel_size(g));
      const VoteKernel k = build_kernel(g, s, s);
      const VoterField f = to_field(field, 0, 4);
      py::gil_scoped_release release;
      Heatmap h = fn(f, k);
      py::gil_scoped_acquire acquire;
      return from_heatmap(h);
    };
  };
  m.def("aggregate", aggregator([](const VoterField& f, const VoteKernel& k) { return aggregate(f, k); }),
        py::arg("field"), py::arg("grid") = LogPolarGrid{}, py::arg("kernel_size") = py::none(),
        "Vote heatmap of a (rows, cols, classes) field; returns (values, (origin_row, origin_col)).");
  m.def("naive_aggregate", aggregator([](const VoterField& f, const VoteKernel& k) { return naive_aggregate(f, k); }),
        py::arg("field"), py::arg("grid") = LogPolarGrid{}, py::arg("kernel_size") = py::none());

  m.def(
      "trws_solve",
      [](const std::vector<DoubleArray>& unaries, const std::vector<std::tuple<int, int, DoubleArray>>& edges,
         int max_iters) { return from_labeling(trws_solve(to_model(unaries, edges), {max_iters, 1e-6})); },
      py::arg("unaries"), py::arg("edges"), py::arg("max_iters") = 100,
      "MAP labeling of a pairwise model; edges are (a, b, cost[a_label, b_label]).");
  m.def(
      "brute_force_map",
      [](const std::vector<DoubleArray>& unaries, const std::vector<std::tuple<int, int, DoubleArray>>& edges) {
        return from_labeling(brute_force_map(to_model(unaries, edges)));
      },
      py::arg("unaries"), py::arg("edges"));

  m.def("keypoint_names", [] {
    std::vector<std::string> out;
    for (const auto& k : Skeleton::standard().keypoints) out.push_back(k.name);
    return out;
  });
  m.def("default_config", [] { return config_to_json(RunConfig{}).dump(2); }, "Default run configuration as JSON.");

  m.def(
      "random_scene",
      [](std::uint64_t seed, int distractors, int height, int width) {
        const SyntheticScene s = random_scene(seed, distractors, height, width);
        py::list poses;
        for (const auto& p : s.poses) poses.append(from_keypoints(p));
        return poses;
      },
      py::arg("seed"), py::arg("distractors") = 0, py::arg("height") = 504, py::arg("width") = 504,
      "Planted people as a list of (30, 2) keypoint arrays; the first is the person of interest.");

  m.def(
      "gen_synthetic",
      [](const std::vector<DoubleArray>& poses, std::uint64_t seed, double label_noise, double background, int height,
         int width, int stride) {
        SyntheticScene scene;
        scene.image_height = height;
        scene.image_width = width;
        for (const auto& p : poses) scene.poses.push_back(to_keypoints(p));
        const auto fields = gen_synthetic(scene, LogPolarGrid{}, stride, {label_noise, background}, seed);
        py::list out;
        for (const auto& f : fields) out.append(from_field(f));
        return out;
      },
      py::arg("poses"), py::arg("seed") = 0, py::arg("label_noise") = 0.0, py::arg("background") = 0.0,
      py::arg("height") = 504, py::arg("width") = 504, py::arg("stride") = 4,
      "Planted voter fields, one (rows, cols, classes) array per keypoint id.");

  m.def(
      "predict",
      [](const std::vector<FloatArray>& fields, const std::optional<std::string>& config,
         std::optional<std::pair<double, double>> person_center, double person_scale, int threads) {
        RunConfig c = parse_config(config);
        c.threads = threads;
        std::vector<VoterField> vf;
        for (std::size_t k = 0; k < fields.size(); ++k) vf.push_back(to_field(fields[k], static_cast<int>(k), c.stride));
        std::optional<PersonHint> hint;
        if (person_center) hint = PersonHint{{person_center->first, person_center->second}, person_scale};
        PoseEstimate est;
        {
          py::gil_scoped_release release;
          est = predict(vf, hint, c);
        }
        py::dict d;
        d["keypoints"] = from_keypoints(est.locations());
        std::vector<double> confidence;
        for (const auto& k : est.keypoints) confidence.push_back(k.confidence);
        d["confidence"] = confidence;
        py::list stages;
        for (const auto& s : est.stages) {
          py::dict sd;
          sd["stage"] = s.stage;
          sd["keypoints"] = s.keypoints;
          sd["energy"] = s.energy;
          sd["lower_bound"] = s.lower_bound;
          sd["converged"] = s.converged;
          stages.append(sd);
        }
        d["stages"] = stages;
        return d;
      },
      py::arg("fields"), py::arg("config") = py::none(), py::arg("person_center") = py::none(),
      py::arg("person_scale") = 0.0, py::arg("threads") = 1,
      "Pose from voter fields indexed by keypoint id; config is optional JSON text.");

  py::class_<Annotation>(m, "Annotation")
      .def_readonly("person_id", &Annotation::person_id)
      .def_property_readonly("keypoints", [](const Annotation& a) { return from_keypoints(a.keypoints); })
      .def_readonly("head_rect", &Annotation::head_rect)
      .def_readonly("scale", &Annotation::scale)
      .def_property_readonly("head_length", [](const Annotation& a) { return head_length(a); });

  m.def("annotate", [](const DoubleArray& pose, int person_id) { return annotate(to_keypoints(pose), person_id); },
        py::arg("pose"), py::arg("person_id") = 0, "Ground truth for a 16- or 30-point pose.");

  m.def(
      "pckh",
      [](const std::vector<DoubleArray>& predictions, const std::vector<Annotation>& truth, double alpha) {
        std::vector<KeypointSet> pred;
        for (const auto& p : predictions) {
          KeypointSet s = to_keypoints(p);
          s.resize(std::min<std::size_t>(s.size(), kNumAnnotated));
          pred.push_back(std::move(s));
        }
        const PckhResult r = pckh(pred, truth, alpha);
        py::dict d;
        d["mean"] = r.mean;
        d["rate"] = r.rate;
        py::dict groups;
        for (std::size_t g = 0; g < r.group_names.size(); ++g) groups[py::str(r.group_names[g])] = r.group_rate[g];
        d["groups"] = groups;
        d["excluded"] = r.excluded;
        return d;
      },
      py::arg("predictions"), py::arg("truth"), py::arg("alpha") = 0.5);

  m.def(
      "selftest",
      [](std::uint64_t seed, int cases) {
        py::list out;
        for (const auto& s : run_selftest(seed, cases)) {
          py::dict d;
          d["name"] = s.name;
          d["cases"] = s.cases;
          d["failures"] = s.failures;
          d["max_error"] = s.max_error;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 0, py::arg("cases") = 50);
}
