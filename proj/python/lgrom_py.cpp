#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lgrom/experiment.hpp"
#include "lgrom/gmsfem.hpp"
#include "lgrom/greedy.hpp"

namespace py = pybind11;
using namespace lgrom;

namespace {

// One trained pipeline: problem + offline artifacts, with per-sample solves.
class Pipeline {
 public:
  explicit Pipeline(const std::string& config_json)
      : cfg_(ExperimentConfig::from_json(nlohmann::json::parse(config_json))),
        problem_(build_problem(cfg_)),
        art_(run_offline(problem_, cfg_)) {}

  int n_samples() const { return art_.greedy.spaces.samples; }
  int reduced_size() const { return art_.greedy.model.system_size(); }
  int local_dim() const { return art_.local->M(); }

  py::dict solve(const Eigen::VectorXd& mu) const {
    const ReducedSolution sol = online_solve(art_.greedy.model, mu);
    py::dict d;
    d["state"] = downscale_state_fine(art_.greedy.model, sol.state);
    d["adjoint"] = downscale_state_fine(art_.greedy.model, sol.adjoint);
    d["control"] = Eigen::VectorXd(art_.greedy.model.Z2 * sol.control);
    return d;
  }

  py::dict reference(const Eigen::VectorXd& mu) const {
    const OptimalTriple t = solve_kkt(problem_.reference(mu));
    py::dict d;
    d["state"] = t.state;
    d["adjoint"] = t.adjoint;
    d["control"] = t.control;
    return d;
  }

  py::dict errors(int n_test) const {
    const auto test = sample_parameters(problem_.domain, n_test, cfg_.seed + 1);
    const OnlineResult r = run_online(problem_, art_.greedy.model, test);
    py::dict d;
    d["e2_u"] = r.errors.e2_u;
    d["e2_f"] = r.errors.e2_f;
    d["e2_lambda"] = r.errors.e2_lambda;
    d["eH_u"] = r.errors.eH_u;
    d["eH_lambda"] = r.errors.eH_lambda;
    d["j_min"] = r.j_min_mean;
    return d;
  }

  std::vector<Eigen::VectorXd> selected() const { return art_.greedy.selected; }

  std::vector<double> greedy_eps() const {
    std::vector<double> eps;
    for (const auto& e : art_.greedy.log) eps.push_back(e.eps);
    return eps;
  }

  void save(const std::string& dir) const {
    ExperimentConfig c = cfg_;
    c.output_dir = dir;
    persist_offline(problem_, art_, c);
  }

 private:
  ExperimentConfig cfg_;
  Problem problem_;
  OfflineArtifacts art_;
};

}  // namespace

PYBIND11_MODULE(_lgrom, m) {
  m.doc() = "local-global reduced models for PDE-constrained optimal control";

  m.def(
      "fine_grid",
      [](int nx, int ny) {
        const FineGrid g = build_fine_grid(nx, ny);
        Eigen::MatrixXi elems(g.num_elements(), 3);
        for (int e = 0; e < g.num_elements(); ++e)
          for (int k = 0; k < 3; ++k) elems(e, k) = g.elements[e][k];
        return py::make_tuple(Eigen::MatrixXd(g.nodes), elems);
      },
      py::arg("nx"), py::arg("ny"), "node coordinates and element connectivity");

  m.def(
      "kl_expand",
      [](int m_points, int n_terms, double sigma) {
        const KlField kl = kl_expand(m_points, n_terms, sigma);
        return py::make_tuple(kl.lambda, kl.phi, kl.points);
      },
      py::arg("m_points"), py::arg("n_terms"), py::arg("sigma") = 1.0,
      "eigenvalues, eigenfunctions, quadrature points of the exponential-covariance expansion");

  m.def(
      "sample_parameters",
      [](const std::string& kind, int dim, int n, unsigned int seed) {
        const ParamDomain d = (kind == "beta") ? ParamDomain::beta(dim, 1.0, 1.0)
                                               : ParamDomain::uniform(dim, -1.0, 1.0);
        return sample_parameters(d, n, seed);
      },
      py::arg("kind"), py::arg("dim"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const RunReport r =
            run_experiment(ExperimentConfig::from_json(nlohmann::json::parse(config_json)));
        py::dict d;
        d["e2_u"] = r.online.errors.e2_u;
        d["e2_f"] = r.online.errors.e2_f;
        d["e2_lambda"] = r.online.errors.e2_lambda;
        d["j_min"] = r.online.j_min_mean;
        d["artifacts"] = r.artifacts;
        return d;
      },
      py::arg("config_json"));

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def_property_readonly("n_samples", &Pipeline::n_samples)
      .def_property_readonly("reduced_size", &Pipeline::reduced_size)
      .def_property_readonly("local_dim", &Pipeline::local_dim)
      .def("solve", &Pipeline::solve, py::arg("mu"))
      .def("reference", &Pipeline::reference, py::arg("mu"))
      .def("errors", &Pipeline::errors, py::arg("n_test") = 20)
      .def("selected", &Pipeline::selected)
      .def("greedy_eps", &Pipeline::greedy_eps)
      .def("save", &Pipeline::save, py::arg("dir"));
}
