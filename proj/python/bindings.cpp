#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "specrecon/errors.hpp"
#include "specrecon/finite_metric.hpp"
#include "specrecon/pipeline.hpp"
#include "specrecon/spectral.hpp"
#include "specrecon/wave_control.hpp"

namespace py = pybind11;
using namespace specrecon;

namespace {

Eigen::MatrixXd cloud_array(const PointCloud& pc) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pc.size()), 2);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = pc.points[i][0];
    m(static_cast<Eigen::Index>(i), 1) = pc.points[i][1];
  }
  return m;
}

Space to_space(const py::handle& h) {
  if (py::isinstance<FlatTorus>(h)) return h.cast<FlatTorus>();
  if (py::isinstance<Circle>(h)) return h.cast<Circle>();
  if (py::isinstance<FlatCone>(h)) return h.cast<FlatCone>();
  throw py::type_error("expected FlatTorus, Circle or FlatCone");
}

PointCloud array_cloud(const Space& space, const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw std::invalid_argument("points must have shape (n, 2)");
  PointCloud pc;
  pc.kind = kind_of(space);
  for (Eigen::Index i = 0; i < m.rows(); ++i) pc.points.push_back({m(i, 0), m(i, 1)});
  return pc;
}

py::dict spectral_dict(const SpectralData& sd) {
  py::dict d;
  d["eigenvalues"] = sd.eigenvalues;
  d["eigfun"] = sd.eigfun;
  d["weights"] = sd.weights;
  d["points"] = cloud_array(sd.points);
  d["provenance"] = sd.provenance;
  return d;
}

py::dict run_dict(const RunResult& r) {
  py::dict arts;
  for (const Artifact& a : r.artifacts) arts[py::str(a.name)] = py::bytes(a.content);
  py::dict d;
  d["command"] = r.command;
  d["artifacts"] = arts;
  d["summary"] = r.summary_json;
  return d;
}

py::dict gh_dict(const GhBound& g) {
  py::dict d;
  d["lower"] = g.lower;
  d["upper"] = g.upper;
  d["witness"] = g.witness;
  return d;
}

template <class Fn>
py::dict run_released(Fn&& fn) {
  RunResult r;
  {
    py::gil_scoped_release release;
    r = fn();
  }
  return run_dict(r);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral reconstruction of collapsed spaces";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<FlatTorus>(m, "FlatTorus")
      .def(py::init<double, double>(), py::arg("R"), py::arg("r"))
      .def_property_readonly("R", &FlatTorus::R)
      .def_property_readonly("r", &FlatTorus::r)
      .def_property_readonly("diameter", &FlatTorus::diameter);
  py::class_<Circle>(m, "Circle")
      .def(py::init<double>(), py::arg("R"))
      .def_property_readonly("R", &Circle::R)
      .def_property_readonly("diameter", &Circle::diameter);
  py::class_<FlatCone>(m, "FlatCone")
      .def(py::init<int, double>(), py::arg("m"), py::arg("rho_max"))
      .def_property_readonly("m", &FlatCone::m)
      .def_property_readonly("rho_max", &FlatCone::rho_max)
      .def_property_readonly("diameter", &FlatCone::diameter);

  m.def("distance", [](const py::object& s, std::array<double, 2> p, std::array<double, 2> q) { return distance(to_space(s), p, q); },
        py::arg("space"), py::arg("p"), py::arg("q"));
  m.def("pairwise_distances",
        [](const py::object& o, const Eigen::MatrixXd& pts) {
          const Space s = to_space(o);
          return pairwise_distances(s, array_cloud(s, pts));
        },
        py::arg("space"), py::arg("points"));
  m.def("sample_uniform", [](const py::object& s, std::size_t n, std::uint64_t seed) {
    return cloud_array(sample_uniform(to_space(s), n, seed));
  }, py::arg("space"), py::arg("n"), py::arg("seed"));
  m.def("sample_helix", [](const FlatTorus& t, std::size_t n, int mm, std::uint64_t seed) {
    return cloud_array(sample_helix(t, n, mm, seed));
  }, py::arg("torus"), py::arg("n"), py::arg("m"), py::arg("seed"));

  m.def("spectrum", [](const py::object& o, int J, const Eigen::MatrixXd& pts) {
    const Space s = to_space(o);
    const PointCloud pc = array_cloud(s, pts);
    return spectral_dict(std::visit(
        [&](const auto& sp) -> SpectralData {
          using T = std::decay_t<decltype(sp)>;
          if constexpr (std::is_same_v<T, FlatTorus>) return torus_spectrum(sp, J, pc);
          else if constexpr (std::is_same_v<T, Circle>) return circle_spectrum(sp, J, pc);
          else return cone_spectrum(sp, J, pc);
        },
        s));
  }, py::arg("space"), py::arg("J"), py::arg("points"), "Exact Laplace spectrum sampled at the points.");
  m.def("heat_kernel_theta", [](const FlatTorus& t, std::array<double, 2> p, std::array<double, 2> q,
                                double time, double tol) { return heat_kernel_theta(t, p, q, time, tol); },
        py::arg("torus"), py::arg("p"), py::arg("q"), py::arg("time"), py::arg("tol") = 1e-14);

  m.def("circle_arc_measure", [](int J, std::size_t n, double half_width, double alpha, double E1, double eps1) {
    const Circle c(1.0);
    const PointCloud pc = equispaced_circle(n);
    const SpectralData sd = circle_spectrum(c, J, pc);
    std::vector<std::size_t> patch;
    for (std::size_t k = 0; k < pc.size(); ++k) {
      const double th = pc.points[k][0];
      if (std::min(th, kTwoPi - th) < half_width) patch.push_back(k);
    }
    ConstraintParams cp;
    cp.E1 = E1;
    cp.eps1 = eps1;
    return measure_estimate(sd, {{patch}, {alpha}}, cp);
  }, py::arg("J"), py::arg("n"), py::arg("half_width"), py::arg("alpha"), py::arg("E1") = 1000.0,
        py::arg("eps1") = 1e-3,
        "Estimated measure of the alpha-neighbourhood of an arc around 0 on the unit circle.");

  m.def("is_metric", &is_metric, py::arg("d"));
  m.def("repair_metric", [](const Eigen::MatrixXd& d, const std::string& backend) {
    RepairBackend b = RepairBackend::Closure;
    if (backend == "projection") b = RepairBackend::Projection;
    else if (backend != "closure") throw std::invalid_argument("backend must be 'closure' or 'projection'");
    const RepairResult r = repair_metric(d, b);
    return py::make_tuple(r.metric.d, r.max_deviation);
  }, py::arg("d"), py::arg("backend") = "closure");
  m.def("gh_exact_small", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, unsigned threads) {
    return gh_dict(gh_exact_small({a}, {b}, threads));
  }, py::arg("a"), py::arg("b"), py::arg("threads") = 1);
  m.def("gh_upper_bound", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::uint64_t seed, std::size_t restarts) {
    return gh_dict(gh_upper_bound({a}, {b}, seed, restarts));
  }, py::arg("a"), py::arg("b"), py::arg("seed") = 0, py::arg("restarts") = 32);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def("canonical_json", &ExperimentConfig::canonical_json)
      .def("hash", &ExperimentConfig::hash);
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", [](const std::string& path) { return load_config(path); }, py::arg("path"));

  m.def("embed", [](const ExperimentConfig& c, unsigned threads) {
    return run_released([&] { return cmd_embed(c, {threads}); });
  }, py::arg("config"), py::arg("threads") = 0);
  m.def("reconstruct", [](const ExperimentConfig& c, unsigned threads) {
    return run_released([&] { return cmd_reconstruct(c, {threads}); });
  }, py::arg("config"), py::arg("threads") = 0);
  m.def("singular", [](const ExperimentConfig& c, unsigned threads) {
    return run_released([&] { return cmd_singular(c, {threads}); });
  }, py::arg("config"), py::arg("threads") = 0);
  m.def("run_and_write", [](const std::string& command, const ExperimentConfig& c, const std::string& out, unsigned threads) {
    RunResult r;
    {
      py::gil_scoped_release release;
      if (command == "embed") r = cmd_embed(c, {threads});
      else if (command == "reconstruct") r = cmd_reconstruct(c, {threads});
      else if (command == "singular") r = cmd_singular(c, {threads});
      else throw std::invalid_argument("unknown command '" + command + "'");
      write_run(out, c, r);
    }
    return r.summary_json;
  }, py::arg("command"), py::arg("config"), py::arg("out"), py::arg("threads") = 0);
  m.def("verify", [](const std::string& dir, std::optional<ExperimentConfig> c) {
    const VerifyReport rep = verify_run(dir, c);
    return py::make_tuple(rep.ok, rep.problems);
  }, py::arg("dir"), py::arg("config") = py::none());
}
