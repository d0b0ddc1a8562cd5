#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdmpc/io.hpp"
#include "sdmpc/monitor.hpp"
#include "sdmpc/polytope.hpp"
#include "sdmpc/qp.hpp"
#include "sdmpc/scenario.hpp"
#include "sdmpc/synthesis.hpp"

namespace py = pybind11;
using namespace sdmpc;

namespace {

ScenarioConfig ConfigFrom(const std::string& config_json) {
  ScenarioConfig c = io::ScenarioConfigFromJson(io::Json::parse(config_json));
  c.Validate();
  return c;
}

py::dict QpResult(const QpSolution& s) {
  py::dict d;
  d["z"] = s.z_star;
  d["objective"] = s.objective;
  d["status"] = std::string(ToString(s.status));
  d["primal_residual"] = s.primal_residual;
  d["dual_residual"] = s.dual_residual;
  d["ineq_multipliers"] = s.ineq_multipliers;
  d["eq_multipliers"] = s.eq_multipliers;
  d["iterations"] = s.iterations;
  return d;
}

// States as (steps, agents, n) and inputs as (steps, agents, m), flattened row-major.
py::dict TraceArrays(const SimulationTrace& tr) {
  const auto T = static_cast<py::ssize_t>(tr.steps.size());
  py::array_t<double> x({T, static_cast<py::ssize_t>(tr.num_agents), static_cast<py::ssize_t>(tr.n)});
  py::array_t<double> u({T, static_cast<py::ssize_t>(tr.num_agents), static_cast<py::ssize_t>(tr.m)});
  py::array_t<int> mode({T, static_cast<py::ssize_t>(tr.num_agents)});
  auto xv = x.mutable_unchecked<3>();
  auto uv = u.mutable_unchecked<3>();
  auto mv = mode.mutable_unchecked<2>();
  for (py::ssize_t t = 0; t < T; ++t) {
    for (int i = 0; i < tr.num_agents; ++i) {
      const AgentStep& a = tr.steps[t].agents[i];
      for (int k = 0; k < tr.n; ++k) xv(t, i, k) = a.x(k);
      for (int k = 0; k < tr.m; ++k) uv(t, i, k) = a.u(k);
      mv(t, i) = a.mode == AgentMode::kDecoupled ? 1 : 0;
    }
  }
  py::dict d;
  d["x"] = x;
  d["u"] = u;
  d["decoupled"] = mode;
  d["switch_step"] = tr.switch_step;
  d["dt"] = tr.dt;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed MPC with switched cost functions";

  py::class_<LtiSystem>(m, "LtiSystem")
      .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd, double>(), py::arg("A"), py::arg("B"), py::arg("dt") = 1.0)
      .def_property_readonly("A", &LtiSystem::A)
      .def_property_readonly("B", &LtiSystem::B)
      .def_property_readonly("dt", &LtiSystem::dt)
      .def("step", &LtiSystem::Step);

  py::class_<Polytope>(m, "Polytope")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("normals"), py::arg("offsets"))
      .def_static("box", &Polytope::Box)
      .def_static("symmetric_box", &Polytope::SymmetricBox)
      .def_property_readonly("dim", &Polytope::dim)
      .def_property_readonly("num_facets", &Polytope::num_facets)
      .def_property_readonly("normals", &Polytope::normals)
      .def_property_readonly("offsets", &Polytope::offsets)
      .def_property_readonly("is_empty", &Polytope::is_empty)
      .def("contains", &Polytope::Contains, py::arg("x"), py::arg("tol") = 1e-9)
      .def("intersect", &Polytope::Intersect)
      .def("scaled", &Polytope::Scaled)
      .def("translated", &Polytope::Translated)
      .def("reduced", &Polytope::Reduced, py::arg("tol") = 1e-9)
      .def("support", &Polytope::Support)
      .def("is_subset_of", &Polytope::IsSubsetOf, py::arg("other"), py::arg("tol") = 1e-7)
      .def("approx_equals", &Polytope::ApproxEquals, py::arg("other"), py::arg("tol") = 1e-7)
      .def("inscribed_radius", &Polytope::InscribedRadiusAtOrigin)
      .def("bounding_box", &Polytope::BoundingBox)
      .def("to_json", [](const Polytope& p) { return io::ToJson(p).dump(); });

  m.def("project", &Project, py::arg("P"), py::arg("keep_dims"));
  m.def("pre_set", &PreSet, py::arg("sys"), py::arg("target"), py::arg("X"), py::arg("U"));
  m.def("pre_n", &PreN, py::arg("sys"), py::arg("X_f"), py::arg("X"), py::arg("U"), py::arg("N"));
  m.def("max_invariant_set", &MaxInvariantSet, py::arg("A_cl"), py::arg("X_k"), py::arg("max_iter") = 200);
  m.def("norm_bound", &NormBound);

  m.def(
      "solve_qp",
      [](Eigen::MatrixXd H, Eigen::VectorXd f, Eigen::MatrixXd G, Eigen::VectorXd h, Eigen::MatrixXd G_eq,
         Eigen::VectorXd b, double eps_abs, int max_iter) {
        const QpProblem p(std::move(H), std::move(f), std::move(G), std::move(h), std::move(G_eq), std::move(b));
        QpSettings s;
        s.eps_abs = eps_abs;
        s.max_iter = max_iter;
        return QpResult(Solve(p, s));
      },
      py::arg("H"), py::arg("f"), py::arg("G"), py::arg("h"), py::arg("G_eq"), py::arg("b"),
      py::arg("eps_abs") = 1e-8, py::arg("max_iter") = 1000);

  m.def("load_config_json", [](const std::string& path) { return io::ToJson(io::LoadScenarioConfig(path)).dump(); });
  m.def("synthesize_json", [](const std::string& config_json) {
    return io::ToJson(SynthesizeScenario(ConfigFrom(config_json))).dump();
  });
  m.def("run_json", [](const std::string& config_json, const std::string& out_dir) {
    const ScenarioConfig c = ConfigFrom(config_json);
    ScenarioRun run;
    {
      py::gil_scoped_release release;
      run = RunScenario(c);
    }
    if (!out_dir.empty()) ExportRun(c, run, out_dir);
    return py::make_tuple(RunSummary(c, run).dump(), TraceArrays(run.trace));
  });
  m.def("monitor_json", [](const std::string& config_json, const std::string& trace_csv,
                           const std::string& synthesis_json) {
    const ScenarioConfig c = ConfigFrom(config_json);
    const SynthesisResult s = synthesis_json.empty() ? SynthesizeScenario(c)
                                                     : io::SynthesisFromJson(io::Json::parse(synthesis_json));
    return io::ToJson(MonitorLemmas(io::ReadTraceCsv(trace_csv), s)).dump();
  });
}
