#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tscenejal/config.hpp"
#include "tscenejal/entropy.hpp"
#include "tscenejal/errors.hpp"
#include "tscenejal/kitti_io.hpp"
#include "tscenejal/sampler.hpp"
#include "tscenejal/scene_graph.hpp"
#include "tscenejal/simulation.hpp"
#include "tscenejal/synth.hpp"
#include "tscenejal/uncertainty.hpp"

namespace py = pybind11;
using namespace tscenejal;

namespace {

using Overrides = std::map<std::string, std::string>;
using MixtureTuple = std::tuple<std::vector<double>, std::vector<double>, std::vector<double>>;

EngineConfig config_from(const Overrides& overrides) {
  ConfigValues values(overrides.begin(), overrides.end());
  return build_engine_config(values);
}

std::optional<std::vector<MixtureTuple>> mixture_to_py(const std::optional<MixtureParams>& m) {
  if (!m) return std::nullopt;
  std::vector<MixtureTuple> out;
  for (const auto& d : m->dims()) out.emplace_back(d.weights, d.means, d.variances);
  return out;
}

std::optional<MixtureParams> mixture_from_py(const std::optional<std::vector<MixtureTuple>>& v) {
  if (!v) return std::nullopt;
  if (v->size() != kBoxDims) throw InvalidArgument("mixture needs one (weights, means, variances) per box parameter");
  std::array<GaussianMixture1D, kBoxDims> dims;
  for (std::size_t i = 0; i < kBoxDims; ++i) {
    const auto& [w, m, s] = (*v)[i];
    dims[i] = GaussianMixture1D{w, m, s};
  }
  return MixtureParams(dims);
}

SimilarityMatrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidArgument("similarity must be a square matrix");
  SimilarityMatrix s;
  s.size = static_cast<std::size_t>(a.shape(0));
  s.values.assign(a.data(), a.data() + s.size * s.size);
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Scene selection engine: entropy, graph-kernel similarity, mixture uncertainty and joint sampling.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  (void)data;

  py::class_<Box3D>(m, "Box3D")
      .def(py::init([](double x, double y, double z, double w, double l, double h, double theta) {
             return Box3D{x, y, z, w, l, h, theta};
           }),
           py::arg("x"), py::arg("y"), py::arg("z"), py::arg("w"), py::arg("l"), py::arg("h"), py::arg("theta"))
      .def_readwrite("x", &Box3D::x)
      .def_readwrite("y", &Box3D::y)
      .def_readwrite("z", &Box3D::z)
      .def_readwrite("w", &Box3D::w)
      .def_readwrite("l", &Box3D::l)
      .def_readwrite("h", &Box3D::h)
      .def_readwrite("theta", &Box3D::theta)
      .def("__eq__", [](const Box3D& a, const Box3D& b) { return a == b; })
      .def("__repr__", [](const Box3D& b) {
        return "Box3D(x=" + std::to_string(b.x) + ", y=" + std::to_string(b.y) + ", z=" + std::to_string(b.z) + ")";
      });

  py::class_<ScoredDetection>(m, "Detection")
      .def(py::init([](std::string label, double confidence, Box3D box,
                       std::optional<std::vector<MixtureTuple>> mixture) {
             return ScoredDetection{std::move(label), confidence, box, mixture_from_py(mixture)};
           }),
           py::arg("class_label"), py::arg("confidence"), py::arg("box"), py::arg("mixture") = py::none())
      .def_readwrite("class_label", &ScoredDetection::class_label)
      .def_readwrite("confidence", &ScoredDetection::confidence)
      .def_readwrite("box", &ScoredDetection::box)
      .def_property(
          "mixture", [](const ScoredDetection& d) { return mixture_to_py(d.mixture); },
          [](ScoredDetection& d, std::optional<std::vector<MixtureTuple>> v) { d.mixture = mixture_from_py(v); });

  py::class_<Scene>(m, "Scene")
      .def(py::init([](std::string id, std::vector<ScoredDetection> dets) { return Scene{std::move(id), std::move(dets)}; }),
           py::arg("id"), py::arg("detections") = std::vector<ScoredDetection>{})
      .def_readwrite("id", &Scene::id)
      .def_readwrite("detections", &Scene::detections)
      .def("__eq__", [](const Scene& a, const Scene& b) { return a == b; })
      .def("__len__", [](const Scene& s) { return s.detections.size(); });

  m.def(
      "parse_label_text",
      [](const std::string& text, const std::string& scene_id, const Overrides& config) {
        return parse_label_text(text, scene_id, config_from(config).catalog);
      },
      py::arg("text"), py::arg("scene_id"), py::arg("config") = Overrides{});
  m.def("serialize_label_file", &serialize_label_file, py::arg("scene"));
  m.def(
      "load_pool_dir",
      [](const std::filesystem::path& dir, bool with_sidecars, const Overrides& config) {
        const auto cfg = config_from(config);
        return load_pool_dir(dir, cfg.catalog, with_sidecars, cfg.unknown_class);
      },
      py::arg("directory"), py::arg("with_sidecars") = true, py::arg("config") = Overrides{});

  m.def(
      "category_entropy",
      [](const Scene& s, const Overrides& config) {
        const auto cfg = config_from(config);
        return category_entropy(s, cfg.catalog, cfg.entropy);
      },
      py::arg("scene"), py::arg("config") = Overrides{});
  m.def(
      "rank_by_entropy",
      [](const std::vector<Scene>& scenes, std::size_t top_n, const Overrides& config) {
        const auto cfg = config_from(config);
        return rank_by_entropy(scenes, cfg.catalog, cfg.entropy, top_n);
      },
      py::arg("scenes"), py::arg("top_n"), py::arg("config") = Overrides{});

  m.def(
      "similarity",
      [](const Scene& a, const Scene& b, const Overrides& config) {
        const auto cfg = config_from(config);
        return similarity(a, b, cfg.catalog, cfg.kernel);
      },
      py::arg("a"), py::arg("b"), py::arg("config") = Overrides{});
  m.def(
      "similarity_matrix",
      [](const std::vector<Scene>& scenes, std::size_t jobs, const Overrides& config) {
        const auto cfg = config_from(config);
        SimilarityMatrix s;
        {
          py::gil_scoped_release release;
          s = pairwise_similarity_matrix(scenes, cfg.catalog, cfg.kernel, jobs);
        }
        py::array_t<double> out({s.size, s.size});
        std::copy(s.values.begin(), s.values.end(), out.mutable_data());
        return out;
      },
      py::arg("scenes"), py::arg("jobs") = 1, py::arg("config") = Overrides{});

  m.def(
      "mixture_stats",
      [](const std::vector<double>& weights, const std::vector<double>& means, const std::vector<double>& variances) {
        std::array<GaussianMixture1D, kBoxDims> dims;
        dims.fill(GaussianMixture1D{weights, means, variances});
        const MixtureParams p(dims);
        return std::make_tuple(mixture_mean(p, BoxDim::x), mixture_au(p, BoxDim::x), mixture_eu(p, BoxDim::x));
      },
      py::arg("weights"), py::arg("means"), py::arg("variances"),
      "Mean, aleatoric and epistemic variance of a one-dimensional Gaussian mixture.");
  m.def(
      "scene_uncertainty",
      [](const Scene& s, const Overrides& config) {
        const auto cfg = config_from(config);
        return scene_uncertainty(s, cfg.anchors, cfg.uncertainty);
      },
      py::arg("scene"), py::arg("config") = Overrides{});
  m.def(
      "rank_by_uncertainty",
      [](const std::vector<Scene>& scenes, std::size_t top_n, const Overrides& config) {
        const auto cfg = config_from(config);
        return rank_by_uncertainty(scenes, cfg.anchors, cfg.uncertainty, top_n);
      },
      py::arg("scenes"), py::arg("top_n"), py::arg("config") = Overrides{});

  m.def(
      "farthest_sampling",
      [](const std::vector<std::string>& ids,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& sim, std::size_t k) {
        return farthest_sampling(ids, matrix_from_array(sim), k);
      },
      py::arg("ids"), py::arg("similarity"), py::arg("k"));
  m.def(
      "three_stage_select",
      [](const std::vector<Scene>& unlabeled, const Overrides& config, std::size_t jobs) {
        const auto cfg = config_from(config);
        const auto ctx = cfg.selection_context(jobs);
        SelectionStats stats;
        std::vector<std::string> ids;
        {
          py::gil_scoped_release release;
          ids = three_stage_select(unlabeled, ctx.plan, ctx.configs, ctx.catalog, ctx.anchors, &stats);
        }
        py::dict info;
        info["stage_sizes"] = stats.stage_sizes;
        info["kernel_evaluations"] = stats.kernel_evaluations;
        info["entropy_sorts"] = stats.entropy_sorts;
        return py::make_tuple(ids, info);
      },
      py::arg("unlabeled"), py::arg("config") = Overrides{}, py::arg("jobs") = 1,
      "Joint selection of plan.n_r scenes; returns (ids, stats).");

  m.def(
      "generate_pool",
      [](std::uint64_t seed, const Overrides& config) {
        const auto pool = make_synthetic_pool(config_from(config), seed);
        return py::make_tuple(pool.ground_truth, pool.predictions);
      },
      py::arg("seed"), py::arg("config") = Overrides{}, "Synthetic (ground_truth, predictions) scene lists.");
  m.def(
      "simulate",
      [](const std::vector<std::string>& strategies, std::uint64_t seed, const Overrides& config, std::size_t jobs) {
        const auto cfg = config_from(config);
        std::vector<Strategy> list;
        for (const auto& s : strategies) list.push_back(strategy_from_name(s));
        std::vector<StrategyOutcome> outcomes;
        {
          py::gil_scoped_release release;
          outcomes = simulate_strategies(cfg, make_synthetic_pool(cfg, seed), list, seed, jobs);
        }
        py::list rows;
        for (const auto& o : outcomes) {
          py::dict row;
          row["strategy"] = std::string(strategy_name(o.strategy));
          row["selected"] = o.selected;
          row["category_kl"] = o.category_kl;
          row["mean_similarity"] = o.mean_similarity;
          row["mean_uncertainty"] = o.mean_uncertainty;
          row["class_histogram"] = o.class_histogram;
          rows.append(row);
        }
        return rows;
      },
      py::arg("strategies"), py::arg("seed") = 0, py::arg("config") = Overrides{}, py::arg("jobs") = 1);
}
