#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cfa/bench.hpp"
#include "cfa/branch_bound.hpp"
#include "cfa/cg_solvers.hpp"
#include "cfa/errors.hpp"
#include "cfa/phi_admm.hpp"
#include "cfa/weyl_bounds.hpp"

namespace py = pybind11;
using namespace cfa;

namespace {

py::dict solution_dict(const Solution& s) {
  py::dict d;
  d["phi"] = s.phi;
  d["theta"] = s.theta.mat();
  d["objective"] = s.objective;
  return d;
}

std::optional<CgAlgorithm> parse_algorithm(const std::optional<std::string>& a) {
  if (!a) return std::nullopt;
  if (*a == "alg1") return CgAlgorithm::Smooth;
  if (*a == "alg2") return CgAlgorithm::Concave;
  throw InputError("algorithm must be 'alg1' or 'alg2'");
}

}  // namespace

PYBIND11_MODULE(_cfa, m) {
  m.doc() = "Rank-constrained factor analysis solvers";

  auto base = py::register_exception<Error>(m, "CfaError", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NotPSDError>(m, "NotPSDError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

  m.def(
      "solve",
      [](const Eigen::MatrixXd& sigma, int rank, double q, std::optional<std::string> algorithm,
         double tol, int restarts, std::uint64_t seed, int admm_max_iter, bool inexact_inner) {
        const ProblemSpec spec = ProblemSpec::make(SymMatrix(sigma), rank, q, tol);
        CgConfig cfg;
        cfg.algorithm = parse_algorithm(algorithm);
        cfg.restarts = restarts;
        cfg.seed = seed;
        cfg.admm_max_iter = admm_max_iter;
        cfg.inexact_inner = inexact_inner;
        CgResult res;
        {
          py::gil_scoped_release release;
          res = solve_cg(spec, cfg);
        }
        py::dict d = solution_dict(res.solution);
        d["w"] = res.solution.w ? py::cast(res.solution.w->mat()) : py::none();
        d["algorithm"] = to_string(res.algorithm);
        d["status"] = to_string(res.status);
        d["iterations"] = res.iterations;
        d["admm_iterations"] = res.admm_iterations;
        py::list trace;
        for (const auto& e : res.trace) {
          py::dict t;
          t["iteration"] = e.iteration;
          t["value"] = e.value;
          t["delta"] = e.delta;
          t["eta"] = e.eta;
          t["wall_ms"] = e.wall_ms;
          t["admm_iterations"] = e.admm_iterations;
          trace.append(t);
        }
        d["trace"] = trace;
        return d;
      },
      py::arg("sigma"), py::arg("rank"), py::arg("q") = 1.0, py::arg("algorithm") = py::none(),
      py::arg("tol") = 1e-5, py::arg("restarts") = 1, py::arg("seed") = 0,
      py::arg("admm_max_iter") = 50000, py::arg("inexact_inner") = false,
      "Conditional-gradient upper bound for min sum_{i>r} lambda_i(Sigma - diag(phi))^q.");

  m.def(
      "certify",
      [](const Eigen::MatrixXd& sigma, int rank, double tol, double epsilon, double beta,
         std::uint64_t seed, long node_cap, double time_cap) {
        const ProblemSpec spec = ProblemSpec::make(SymMatrix(sigma), rank, 1.0);
        BbConfig cfg;
        cfg.tol = tol;
        cfg.epsilon = epsilon;
        cfg.beta = beta;
        cfg.seed = seed;
        cfg.node_cap = node_cap;
        cfg.time_cap = time_cap;
        BbReport rep;
        {
          py::gil_scoped_release release;
          rep = certify(spec, cfg);
        }
        py::dict d = solution_dict(rep.incumbent);
        d["z_f"] = rep.z_f;
        d["z_lb"] = rep.z_lb;
        d["gap"] = rep.gap;
        d["root_weyl"] = rep.root_weyl;
        d["nodes_processed"] = rep.nodes_processed;
        d["nodes_pruned_weyl"] = rep.nodes_pruned_weyl;
        d["termination"] = to_string(rep.termination);
        d["wall_time"] = rep.wall_time;
        return d;
      },
      py::arg("sigma"), py::arg("rank"), py::arg("tol") = 0.1, py::arg("epsilon") = 0.4,
      py::arg("beta") = 0.9, py::arg("seed") = 0, py::arg("node_cap") = 100000,
      py::arg("time_cap") = 3600.0, "Branch-and-bound certificate for q = 1.");

  m.def(
      "objective",
      [](const Eigen::MatrixXd& sigma, int rank, const Eigen::VectorXd& phi, double q) {
        return objective_fq(SymMatrix(sigma), rank, q, phi);
      },
      py::arg("sigma"), py::arg("rank"), py::arg("phi"), py::arg("q") = 1.0);

  m.def(
      "compute_u", [](const Eigen::MatrixXd& sigma) { return compute_u(SymMatrix(sigma)); },
      py::arg("sigma"), "Largest admissible phi_i per coordinate.");

  m.def(
      "weyl_lower_bound",
      [](const Eigen::MatrixXd& sigma, const Eigen::VectorXd& upper, int rank) {
        return weyl_lower_bound(SymMatrix(sigma), upper, rank);
      },
      py::arg("sigma"), py::arg("upper"), py::arg("rank"));

  m.def(
      "mtfa",
      [](const Eigen::MatrixXd& sigma, double tol) {
        const MtfaResult r = solve_mtfa(SymMatrix(sigma), tol);
        py::dict d;
        d["phi"] = r.phi;
        d["theta"] = r.theta.mat();
        d["iterations"] = r.iterations;
        return d;
      },
      py::arg("sigma"), py::arg("tol") = 1e-9, "Minimum trace factor analysis.");

  m.def(
      "pc_baseline",
      [](const Eigen::MatrixXd& sigma, int rank) {
        const PcResult r = pc_baseline(SymMatrix(sigma), rank);
        py::dict d;
        d["phi"] = r.phi;
        d["theta"] = r.theta.mat();
        return d;
      },
      py::arg("sigma"), py::arg("rank"));

  m.def(
      "generate",
      [](const std::string& instance, std::uint64_t seed) {
        const GroundTruth g = generate(InstanceSpec::parse(instance, seed));
        py::dict d;
        d["name"] = g.spec.name();
        d["sigma"] = g.sigma.mat();
        d["theta"] = g.theta.mat();
        d["phi"] = g.phi;
        d["scaling"] = g.scaling;
        return d;
      },
      py::arg("instance"), py::arg("seed") = 0,
      "Synthetic instance, e.g. generate('A1(3/200)', seed=1).");

  m.def(
      "metrics",
      [](const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& theta_true,
         const Eigen::VectorXd& phi_true, const Eigen::VectorXd& phi_hat,
         const Eigen::MatrixXd& theta_hat, int rank) {
        const MetricRow r = metrics(SymMatrix(sigma), SymMatrix(theta_true), phi_true, phi_hat,
                                    SymMatrix(theta_hat), rank);
        py::dict d;
        d["error_phi"] = r.error_phi;
        d["error_theta"] = r.error_theta;
        d["explained_variance"] = r.explained_variance;
        d["lambda_min"] = r.lambda_min;
        return d;
      },
      py::arg("sigma"), py::arg("theta_true"), py::arg("phi_true"), py::arg("phi_hat"),
      py::arg("theta_hat"), py::arg("rank"));
}
