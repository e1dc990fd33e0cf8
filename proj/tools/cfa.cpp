// Command-line front end: solve, certify, bench, datagen, sweep.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfa/bench.hpp"
#include "cfa/branch_bound.hpp"
#include "cfa/cg_solvers.hpp"
#include "cfa/errors.hpp"
#include "cfa/io.hpp"

using namespace cfa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitConvergence = 4;

struct Options {
  std::string input;
  std::string output;
  std::string truth;
  std::string trace;
  std::string progress;
  int rank = 1;
  double q = 1.0;
  std::string algorithm;
  double tol = 1e-5;
  double admm_factor = 1e-4;
  int admm_max_iter = 50000;
  bool inexact_inner = false;
  int restarts = 1;
  double bb_tol = 0.1;
  double epsilon = 0.4;
  double beta = 0.9;
  std::uint64_t seed = 0;
  long node_cap = 100000;
  double time_cap = 3600.0;
  int jobs = 1;
  std::string sweep_ranks;
  std::vector<std::string> instances;
  std::string instance;
  std::vector<std::string> methods{"cfa1", "pc"};
  int seeds = 1;
  std::optional<int> bench_rank;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

CgConfig cg_config(const Options& o) {
  CgConfig c;
  if (o.algorithm == "alg1") c.algorithm = CgAlgorithm::Smooth;
  else if (o.algorithm == "alg2") c.algorithm = CgAlgorithm::Concave;
  else if (!o.algorithm.empty()) throw InputError("--algorithm must be alg1 or alg2");
  c.restarts = o.restarts;
  c.seed = o.seed;
  c.admm_max_iter = o.admm_max_iter;
  c.inexact_inner = o.inexact_inner;
  return c;
}

std::vector<int> parse_ranks(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    try {
      if (colon == std::string::npos) {
        out.push_back(std::stoi(tok));
      } else {
        const int a = std::stoi(tok.substr(0, colon));
        const int b = std::stoi(tok.substr(colon + 1));
        for (int r = a; r <= b; ++r) out.push_back(r);
      }
    } catch (const std::logic_error&) {
      throw InputError("cannot parse rank list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty rank list");
  return out;
}

std::string csv_num(double v) { return std::isfinite(v) ? format_double(v) : ""; }

int cmd_solve(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec spec = ProblemSpec::make(read_matrix_csv(o.input), o.rank, o.q, o.tol,
                                             o.admm_factor);
  const CgResult res = solve_cg(spec, cg_config(o));
  nlohmann::json report = solve_report_json(spec, res, ms_since(t0));
  if (!o.truth.empty()) {
    const TruthFile t = read_truth_json(o.truth);
    if (t.phi.size() != spec.dim()) throw InputError("truth dimension does not match the input");
    report["metrics"] =
        metrics_json(metrics(spec.sigma, t.theta, t.phi, res.solution.phi, res.solution.theta, o.rank));
  }
  if (!o.trace.empty()) {
    std::ofstream tr(o.trace);
    if (!tr) throw InputError("cannot write '" + o.trace + "'");
    for (const auto& e : res.trace) tr << trace_entry_json(e).dump() << '\n';
  }
  write_json(o.output, report);
  return kExitOk;
}

int cmd_certify(const Options& o) {
  if (o.q != 1.0) throw InputError("certify supports q = 1 only");
  const ProblemSpec spec = ProblemSpec::make(read_matrix_csv(o.input), o.rank, 1.0, o.tol,
                                             o.admm_factor);
  BbConfig cfg;
  cfg.tol = o.bb_tol;
  cfg.epsilon = o.epsilon;
  cfg.beta = o.beta;
  cfg.seed = o.seed;
  cfg.node_cap = o.node_cap;
  cfg.time_cap = o.time_cap;
  std::ofstream prog;
  BbProgressFn fn;
  if (!o.progress.empty()) {
    prog.open(o.progress);
    if (!prog) throw InputError("cannot write '" + o.progress + "'");
    fn = [&prog](const BbProgress& ev) { prog << progress_json(ev).dump() << '\n'; };
  }
  const BbReport rep = certify(spec, cfg, fn);
  write_json(o.output, bb_report_json(spec, rep));
  return kExitOk;
}

int cmd_bench(const Options& o) {
  if (o.instances.empty()) throw InputError("bench needs at least one --instance");
  std::vector<BenchTask> tasks;
  for (const std::string& text : o.instances) {
    for (int s = 0; s < o.seeds; ++s) {
      const InstanceSpec inst = InstanceSpec::parse(text, o.seed + static_cast<std::uint64_t>(s));
      int r = o.bench_rank.value_or(inst.cls == InstanceClass::A2 ? 1 : inst.R - 1);
      for (const std::string& m : o.methods) tasks.push_back({inst, r, parse_method(m)});
    }
  }
  const std::vector<BenchRow> rows = run_batch(tasks, o.jobs);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!o.output.empty() && o.output != "-") {
    file.open(o.output);
    if (!file) throw InputError("cannot write '" + o.output + "'");
    out = &file;
  }
  *out << "instance,seed,rank,method,objective,error_phi,error_theta,explained_variance,"
          "lambda_min,error_phi_raw,error_theta_raw,iterations,wall_ms,error\n";
  for (const BenchRow& r : rows) {
    *out << r.task.instance.name() << ',' << r.task.instance.seed << ',' << r.task.rank << ','
         << to_string(r.task.method) << ',' << csv_num(r.objective) << ','
         << csv_num(r.metrics.error_phi) << ',' << csv_num(r.metrics.error_theta) << ','
         << csv_num(r.metrics.explained_variance) << ',' << csv_num(r.metrics.lambda_min) << ','
         << csv_num(r.metrics.error_phi_raw) << ',' << csv_num(r.metrics.error_theta_raw) << ','
         << r.iterations << ',' << csv_num(r.wall_ms) << ',' << '"' << r.error << '"' << '\n';
  }
  return kExitOk;
}

int cmd_datagen(const Options& o) {
  if (o.output.empty()) throw InputError("datagen needs --output for the matrix CSV");
  const GroundTruth g = generate(InstanceSpec::parse(o.instance, o.seed));
  write_matrix_csv(o.output, g.sigma.mat());
  std::string sidecar = o.truth;
  if (sidecar.empty()) {
    const auto dot = o.output.rfind('.');
    sidecar = (dot == std::string::npos ? o.output : o.output.substr(0, dot)) + ".truth.json";
  }
  write_json(sidecar, truth_json(g));
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const SymMatrix sigma = read_matrix_csv(o.input);
  const std::vector<int> ranks = parse_ranks(o.sweep_ranks);
  std::optional<TruthFile> truth;
  if (!o.truth.empty()) truth = read_truth_json(o.truth);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!o.output.empty() && o.output != "-") {
    file.open(o.output);
    if (!file) throw InputError("cannot write '" + o.output + "'");
    out = &file;
  }
  *out << "rank,objective,explained_variance,lambda_min";
  if (truth) *out << ",error_phi,error_theta";
  *out << '\n';
  for (int r : ranks) {
    const ProblemSpec spec = ProblemSpec::make(sigma, r, o.q, o.tol, o.admm_factor);
    const CgResult res = solve_cg(spec, cg_config(o));
    const Solution& s = res.solution;
    const Eigen::VectorXd resid = sym_eigenvalues(sigma.minus_diag(s.phi));
    const Eigen::VectorXd th = sym_eigenvalues(s.theta);
    const double ev = resid.sum() != 0.0 ? th.head(r).sum() / resid.sum() : 0.0;
    *out << r << ',' << format_double(s.objective) << ',' << format_double(ev) << ','
         << format_double(resid(resid.size() - 1));
    if (truth) {
      const MetricRow m = metrics(sigma, truth->theta, truth->phi, s.phi, s.theta, r);
      *out << ',' << format_double(m.error_phi) << ',' << format_double(m.error_theta);
    }
    *out << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-constrained factor analysis: upper bounds, certification and benchmarks"};
  app.require_subcommand(1);
  Options o;

  auto add_problem = [&](CLI::App* c) {
    c->add_option("--input,-i", o.input, "Covariance matrix CSV (headerless)")->required();
    c->add_option("--rank,-r", o.rank, "Number of common factors r");
    c->add_option("--q", o.q, "Schatten exponent q >= 1");
    c->add_option("--tol", o.tol, "Relative stopping tolerance of the CG loop");
    c->add_option("--admm-tol-factor", o.admm_factor, "Inner ADMM tolerance = tol * factor");
    c->add_option("--admm-max-iter", o.admm_max_iter, "Inner ADMM iteration cap");
    c->add_flag("--inexact-inner", o.inexact_inner,
                "Accept capped inner ADMM iterates instead of failing");
    c->add_option("--output,-o", o.output, "Output path (default stdout)");
  };

  CLI::App* solve = app.add_subcommand("solve", "Run conditional gradient (upper bound)");
  add_problem(solve);
  solve->add_option("--algorithm", o.algorithm, "alg1 (smooth) or alg2 (concave marginal)");
  solve->add_option("--restarts", o.restarts, "Number of starts (first deterministic)");
  solve->add_option("--seed", o.seed, "Seed for random restarts");
  solve->add_option("--truth", o.truth, "Ground-truth JSON sidecar; adds metrics to the report");
  solve->add_option("--trace", o.trace, "Write the per-iteration trace as JSON lines");

  CLI::App* cert = app.add_subcommand("certify", "Branch and bound certificate (q = 1)");
  add_problem(cert);
  cert->add_option("--bb-tol", o.bb_tol, "Additive optimality gap");
  cert->add_option("--epsilon", o.epsilon, "Branch point shift toward the lower bound");
  cert->add_option("--beta", o.beta, "Node selection probability");
  cert->add_option("--seed", o.seed, "Node selection seed");
  cert->add_option("--node-cap", o.node_cap, "Maximum number of processed nodes");
  cert->add_option("--time-cap", o.time_cap, "Wall-clock limit in seconds");
  cert->add_option("--progress", o.progress, "Write one JSON line per processed node");

  CLI::App* bench = app.add_subcommand("bench", "Synthetic benchmark table (CSV)");
  bench->add_option("--instance", o.instances, "Instance class, e.g. 'A1(3/200)' (repeatable)")
      ->required();
  bench->add_option("--seeds", o.seeds, "Seeds per instance, starting at --seed");
  bench->add_option("--seed", o.seed, "First seed");
  bench->add_option("--methods", o.methods, "Comma-separated subset of cfa1,cfa2,mtfa,pc")
      ->delimiter(',');
  bench->add_option("--rank", o.bench_rank, "Rank (default R-1, or 1 for A2)");
  bench->add_option("--jobs,-j", o.jobs, "Worker threads");
  bench->add_option("--output,-o", o.output, "CSV output path (default stdout)");

  CLI::App* datagen = app.add_subcommand("datagen", "Generate a synthetic instance");
  datagen->add_option("--instance", o.instance, "Instance class, e.g. 'B2(5/10/100)'")->required();
  datagen->add_option("--seed", o.seed, "Generator seed");
  datagen->add_option("--output,-o", o.output, "Matrix CSV path")->required();
  datagen->add_option("--truth", o.truth, "Ground-truth JSON path (default <output>.truth.json)");

  CLI::App* sweep = app.add_subcommand("sweep", "Solve for a list of ranks (CSV)");
  sweep->add_option("--input,-i", o.input, "Covariance matrix CSV")->required();
  sweep->add_option("--sweep-ranks", o.sweep_ranks, "Ranks, e.g. 1,2,5 or 1:10")->required();
  sweep->add_option("--q", o.q, "Schatten exponent q >= 1");
  sweep->add_option("--tol", o.tol, "Relative stopping tolerance of the CG loop");
  sweep->add_option("--algorithm", o.algorithm, "alg1 or alg2");
  sweep->add_option("--truth", o.truth, "Ground-truth JSON sidecar");
  sweep->add_option("--admm-max-iter", o.admm_max_iter, "Inner ADMM iteration cap");
  sweep->add_flag("--inexact-inner", o.inexact_inner, "Accept capped inner ADMM iterates");
  sweep->add_option("--output,-o", o.output, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*cert) return cmd_certify(o);
    if (*bench) return cmd_bench(o);
    if (*datagen) return cmd_datagen(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NotPSDError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  }
  return kExitOk;
}
