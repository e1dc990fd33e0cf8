#include "cfa/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <regex>
#include <thread>

#include "cfa/cg_solvers.hpp"
#include "cfa/errors.hpp"
#include "cfa/phi_admm.hpp"
#include "cfa/rng.hpp"

namespace cfa {

namespace {

void validate(const InstanceSpec& s) {
  if (s.p < 1) throw InputError("instance: p must be >= 1");
  switch (s.cls) {
    case InstanceClass::A1:
      if (s.R < 1 || s.R >= s.p) throw InputError("A1 requires 1 <= R < p");
      break;
    case InstanceClass::A2:
      break;
    case InstanceClass::B1:
      if (s.R < 1 || s.R > s.p) throw InputError("B1 requires 1 <= R <= p");
      break;
    case InstanceClass::B2:
    case InstanceClass::B3:
      if (s.r_inner < 1 || s.r_inner > s.R || s.R > s.p)
        throw InputError("B2/B3 require 1 <= r <= R <= p");
      break;
  }
}

// Equispaced values from `first` towards `last`, scaled so they sum to `total`.
Eigen::VectorXd scaled_grid(double first, double last, int p, double denom, double total,
                            double* phi_bar) {
  Eigen::VectorXd g(p);
  for (int i = 0; i < p; ++i) g(i) = first + (last - first) * i / denom;
  const double s = g.sum();
  *phi_bar = s > 0.0 ? total / s : 0.0;
  return *phi_bar * g;
}

Eigen::MatrixXd gaussian(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void standardize(GroundTruth& g, const Eigen::MatrixXd& theta_raw, const Eigen::VectorXd& phi_raw) {
  Eigen::MatrixXd sig = theta_raw;
  sig.diagonal() += phi_raw;
  const Eigen::Index p = sig.rows();
  g.scaling.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(sig(i, i) > 0.0)) throw InputError("generated covariance has a zero variance");
    g.scaling(i) = 1.0 / std::sqrt(sig(i, i));
  }
  const auto d = g.scaling.asDiagonal();
  Eigen::MatrixXd theta = d * theta_raw * d;
  Eigen::MatrixXd s = d * sig * d;
  s.diagonal().setOnes();
  g.theta = SymMatrix(std::move(theta));
  g.sigma = SymMatrix(std::move(s));
  g.phi = g.scaling.array().square().matrix().cwiseProduct(phi_raw);
  g.raw_phi_trace = phi_raw.sum();
  g.raw_theta_trace = theta_raw.trace();
}

}  // namespace

const char* to_string(InstanceClass c) {
  switch (c) {
    case InstanceClass::A1: return "A1";
    case InstanceClass::A2: return "A2";
    case InstanceClass::B1: return "B1";
    case InstanceClass::B2: return "B2";
    case InstanceClass::B3: return "B3";
  }
  return "?";
}

InstanceSpec InstanceSpec::parse(const std::string& text, std::uint64_t seed) {
  static const std::regex re(R"(^\s*([ABab][123])\s*\(\s*(\d+)(?:\s*/\s*(\d+))?(?:\s*/\s*(\d+))?\s*\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw InputError("cannot parse instance spec '" + text + "'");
  InstanceSpec s;
  s.seed = seed;
  std::string cls = m[1].str();
  cls[0] = static_cast<char>(std::toupper(cls[0]));
  std::vector<int> nums;
  for (int k = 2; k <= 4; ++k)
    if (m[k].matched) nums.push_back(std::stoi(m[k].str()));
  auto want = [&](std::size_t n) {
    if (nums.size() != n) throw InputError("wrong number of size parameters in '" + text + "'");
  };
  if (cls == "A1") {
    want(2);
    s.cls = InstanceClass::A1;
    s.R = nums[0];
    s.p = nums[1];
  } else if (cls == "A2") {
    want(1);
    s.cls = InstanceClass::A2;
    s.p = nums[0];
    s.R = nums[0];
  } else if (cls == "B1") {
    want(2);
    s.cls = InstanceClass::B1;
    s.R = nums[0];
    s.p = nums[1];
  } else {
    want(3);
    s.cls = cls == "B2" ? InstanceClass::B2 : InstanceClass::B3;
    s.r_inner = nums[0];
    s.R = nums[1];
    s.p = nums[2];
  }
  validate(s);
  return s;
}

std::string InstanceSpec::name() const {
  const std::string c = to_string(cls);
  switch (cls) {
    case InstanceClass::A2: return c + "(" + std::to_string(p) + ")";
    case InstanceClass::A1:
    case InstanceClass::B1: return c + "(" + std::to_string(R) + "/" + std::to_string(p) + ")";
    default:
      return c + "(" + std::to_string(r_inner) + "/" + std::to_string(R) + "/" + std::to_string(p) +
             ")";
  }
}

GroundTruth generate(const InstanceSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const int p = spec.p;
  GroundTruth g;
  g.spec = spec;

  if (spec.cls == InstanceClass::A1) {
    const Eigen::MatrixXd l = gaussian(p, spec.R, rng);
    const Eigen::VectorXd ev = sym_eigenvalues(Eigen::MatrixXd(l.transpose() * l));
    const Eigen::MatrixXd theta = l * l.transpose();
    const Eigen::VectorXd phi =
        scaled_grid(ev(0), ev(spec.R - 1), p, static_cast<double>(p), theta.trace(), &g.phi_bar);
    standardize(g, theta, phi);
    return g;
  }

  if (spec.cls == InstanceClass::A2) {
    const Eigen::MatrixXd l = gaussian(p, p, rng);
    const EigenPairs e = sym_eigen(Eigen::MatrixXd(l * l.transpose()));
    Eigen::VectorXd lam(p);
    for (int i = 0; i < p; ++i) lam(i) = std::pow(0.8, (i + 1) / 2.0);
    const Eigen::MatrixXd theta = e.vectors * lam.asDiagonal() * e.vectors.transpose();
    const double denom = p > 1 ? p - 1.0 : 1.0;
    const Eigen::VectorXd phi =
        scaled_grid(lam(0), lam(p - 1), p, denom, theta.trace(), &g.phi_bar);
    standardize(g, theta, phi);
    return g;
  }

  const int big_r = spec.R;
  const int small_r = spec.r_inner;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, big_r);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < big_r; ++j) {
      switch (spec.cls) {
        case InstanceClass::B1:
          l(i, j) = i <= j ? 1.0 : 0.0;
          break;
        case InstanceClass::B2:
          if (i < small_r) l(i, j) = j < small_r ? 1.0 : 0.0;
          else l(i, j) = rng.normal();
          break;
        case InstanceClass::B3:
          if (j < small_r) l(i, j) = i <= j ? 1.0 : 0.0;
          else l(i, j) = i < big_r ? rng.normal() : 0.0;
          break;
        default:
          break;
      }
    }
  }
  const Eigen::MatrixXd theta = l * l.transpose();
  Eigen::VectorXd draw(p);
  for (int i = 0; i < p; ++i) draw(i) = std::abs(rng.normal());
  g.alpha = theta.trace() / draw.sum();
  standardize(g, theta, g.alpha * draw);
  return g;
}

PcResult pc_baseline(const SymMatrix& sigma, int r) {
  PcResult out;
  out.theta = best_rank_r(sigma, r);
  out.phi = (sigma.mat().diagonal() - out.theta.mat().diagonal()).cwiseMax(0.0);
  return out;
}

MetricRow metrics(const SymMatrix& sigma, const SymMatrix& theta_true, const PhiVec& phi_true,
                  const PhiVec& phi_hat, const SymMatrix& theta_hat, int r) {
  if (phi_hat.size() != phi_true.size() || theta_hat.dim() != theta_true.dim() ||
      sigma.dim() != phi_hat.size())
    throw InputError("metrics: dimension mismatch");
  MetricRow m;
  m.error_phi = (phi_hat - phi_true).squaredNorm();
  m.error_theta = (theta_hat.mat() - best_rank_r(theta_true, r).mat()).squaredNorm();
  const Eigen::VectorXd resid = sym_eigenvalues(sigma.minus_diag(phi_hat));
  m.lambda_min = resid(resid.size() - 1);
  const Eigen::VectorXd th = sym_eigenvalues(theta_hat);
  const double denom = resid.sum();
  m.explained_variance = denom != 0.0 ? th.head(std::min<Eigen::Index>(r, th.size())).sum() / denom
                                      : 0.0;
  return m;
}

MetricRow metrics(const GroundTruth& truth, const PhiVec& phi_hat, const SymMatrix& theta_hat,
                  int r) {
  MetricRow m = metrics(truth.sigma, truth.theta, truth.phi, phi_hat, theta_hat, r);
  if (truth.scaling.size() == phi_hat.size()) {
    const Eigen::VectorXd inv = truth.scaling.cwiseInverse();
    const auto d = inv.asDiagonal();
    const Eigen::VectorXd inv2 = inv.array().square().matrix();
    m.error_phi_raw = (inv2.cwiseProduct(phi_hat - truth.phi)).squaredNorm();
    // Truncation is not scale invariant, so map the correlation-unit target back.
    const Eigen::MatrixXd target = d * best_rank_r(truth.theta, r).mat() * d;
    m.error_theta_raw = (d * theta_hat.mat() * d - target).squaredNorm();
  }
  return m;
}

Method parse_method(const std::string& s) {
  if (s == "cfa1") return Method::Cfa1;
  if (s == "cfa2") return Method::Cfa2;
  if (s == "mtfa") return Method::Mtfa;
  if (s == "pc") return Method::Pc;
  throw InputError("unknown method '" + s + "' (expected cfa1, cfa2, mtfa, pc)");
}

const char* to_string(Method m) {
  switch (m) {
    case Method::Cfa1: return "cfa1";
    case Method::Cfa2: return "cfa2";
    case Method::Mtfa: return "mtfa";
    case Method::Pc: return "pc";
  }
  return "?";
}

BenchRow run_task(const BenchTask& task) {
  BenchRow row;
  row.task = task;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const GroundTruth g = generate(task.instance);
    PhiVec phi;
    SymMatrix theta;
    switch (task.method) {
      case Method::Cfa1:
      case Method::Cfa2: {
        const double q = task.method == Method::Cfa1 ? 1.0 : 2.0;
        const ProblemSpec spec = ProblemSpec::make(g.sigma, task.rank, q);
        const CgResult res = solve_cg(spec);
        phi = res.solution.phi;
        theta = res.solution.theta;
        row.iterations = res.iterations;
        break;
      }
      case Method::Mtfa: {
        const MtfaResult res = solve_mtfa(g.sigma, 1e-9);
        phi = res.phi;
        theta = res.theta;
        row.iterations = res.iterations;
        break;
      }
      case Method::Pc: {
        const PcResult res = pc_baseline(g.sigma, task.rank);
        phi = res.phi;
        theta = res.theta;
        break;
      }
    }
    row.metrics = metrics(g, phi, theta, task.rank);
    row.objective = trailing_sum(sym_eigenvalues(g.sigma.minus_diag(phi)), task.rank);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<BenchRow> run_batch(const std::vector<BenchTask>& tasks, int jobs) {
  std::vector<BenchRow> rows(tasks.size());
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) rows[i] = run_task(tasks[i]);
  };
  if (n <= 1) {
    worker();
    return rows;
  }
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace cfa
