#include "cfa/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "cfa/errors.hpp"

namespace cfa {

LogLevel log_level() {
  const char* env = std::getenv("CFA_LOG");
  if (!env) return LogLevel::Warn;
  std::string s(env);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& msg) {
  static std::mutex mu;
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[cfa " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& tok, std::size_t line) {
  const std::string t = trim(tok);
  if (t.empty()) throw InputError("line " + std::to_string(line) + ": empty field");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw InputError("line " + std::to_string(line) + ": cannot parse '" + t + "'");
  if (!std::isfinite(v))
    throw InputError("line " + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

SymMatrix parse_matrix_csv(std::istream& in, double* max_asymmetry) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(parse_number(tok, lineno));
    if (!line.empty() && line.back() == ',')
      throw InputError("line " + std::to_string(lineno) + ": trailing comma");
    rows.push_back(std::move(row));
  }
  const std::size_t p = rows.size();
  if (p == 0) throw InputError("empty matrix");
  Eigen::MatrixXd a(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    if (rows[i].size() != p)
      throw InputError("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                       " entries, expected " + std::to_string(p));
    for (std::size_t j = 0; j < p; ++j) a(i, j) = rows[i][j];
  }
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (max_asymmetry) *max_asymmetry = asym;
  const double limit = kMaxAsymmetry * std::max(1.0, a.cwiseAbs().maxCoeff());
  if (asym > limit) {
    std::ostringstream os;
    os << "input matrix is not symmetric (max |A - A'| = " << asym << ")";
    throw InputError(os.str());
  }
  if (asym > 1e-8) {
    std::ostringstream os;
    os << "input matrix is not symmetric (max |A - A'| = " << asym << "); using (A + A')/2";
    log(LogLevel::Warn, os.str());
  }
  return SymMatrix(a);
}

SymMatrix read_matrix_csv(const std::string& path, double* max_asymmetry) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_matrix_csv(in, max_asymmetry);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_matrix_csv(out, m);
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(vector_json(m.row(i).transpose()));
  return j;
}

Eigen::VectorXd json_vector(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw InputError("expected a nonempty JSON array of rows");
  const std::size_t p = j.size();
  Eigen::MatrixXd m(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    if (!j[i].is_array() || j[i].size() != p) throw InputError("matrix rows must have length p");
    for (std::size_t k = 0; k < p; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

nlohmann::json trace_entry_json(const CgTraceEntry& e) {
  return {{"iteration", e.iteration}, {"value", e.value},     {"delta", e.delta},
          {"eta", e.eta},             {"wall_ms", e.wall_ms}, {"admm_iterations", e.admm_iterations}};
}

nlohmann::json solve_report_json(const ProblemSpec& spec, const CgResult& res, double wall_ms) {
  const Solution& s = res.solution;
  const Eigen::VectorXd theta_eigs = sym_eigenvalues(s.theta);
  const Eigen::VectorXd resid = sym_eigenvalues(spec.sigma.minus_diag(s.phi));
  const double denom = resid.sum();
  const double ev = denom != 0.0 ? theta_eigs.head(spec.rank).sum() / denom : 0.0;
  return {{"command", "solve"},
          {"p", spec.dim()},
          {"rank", spec.rank},
          {"q", spec.q},
          {"algorithm", to_string(res.algorithm)},
          {"status", to_string(res.status)},
          {"objective", s.objective},
          {"phi", vector_json(s.phi)},
          {"theta_eigenvalues", vector_json(theta_eigs)},
          {"explained_variance", ev},
          {"lambda_min", resid(resid.size() - 1)},
          {"iterations", res.iterations},
          {"admm_iterations", res.admm_iterations},
          {"wall_ms", wall_ms}};
}

nlohmann::json bb_report_json(const ProblemSpec& spec, const BbReport& rep) {
  return {{"command", "certify"},
          {"p", spec.dim()},
          {"rank", spec.rank},
          {"z_f", rep.z_f},
          {"z_lb", rep.z_lb},
          {"gap", rep.gap},
          {"initial_upper", rep.initial_upper},
          {"root_weyl", rep.root_weyl},
          {"root_relaxation", std::isfinite(rep.root_relaxation) ? nlohmann::json(rep.root_relaxation)
                                                                  : nlohmann::json(nullptr)},
          {"nodes_processed", rep.nodes_processed},
          {"nodes_pruned_weyl", rep.nodes_pruned_weyl},
          {"incumbent_updates", rep.incumbent_updates},
          {"termination", to_string(rep.termination)},
          {"wall_time", rep.wall_time},
          {"seed", rep.seed},
          {"phi", vector_json(rep.incumbent.phi)},
          {"objective", rep.incumbent.objective}};
}

nlohmann::json progress_json(const BbProgress& ev) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"node", ev.node},           {"depth", ev.depth},
          {"z_f", num(ev.z_f)},        {"z_lb", num(ev.z_lb)},
          {"node_bound", num(ev.node_bound)}, {"weyl_bound", num(ev.weyl_bound)},
          {"volume", ev.volume},       {"action", ev.action},
          {"node_iterations", ev.node_iterations}};
}

nlohmann::json truth_json(const GroundTruth& g) {
  return {{"instance", g.spec.name()},
          {"class", to_string(g.spec.cls)},
          {"p", g.spec.p},
          {"R", g.spec.R},
          {"r_inner", g.spec.r_inner},
          {"seed", g.spec.seed},
          {"alpha", g.alpha},
          {"phi_bar", g.phi_bar},
          {"scaling", vector_json(g.scaling)},
          {"phi", vector_json(g.phi)},
          {"theta", matrix_json(g.theta.mat())}};
}

nlohmann::json metrics_json(const MetricRow& m) {
  return {{"error_phi", m.error_phi},
          {"error_theta", m.error_theta},
          {"explained_variance", m.explained_variance},
          {"lambda_min", m.lambda_min}};
}

TruthFile read_truth_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed JSON in '" + path + "': " + e.what());
  }
  if (!j.contains("phi") || !j.contains("theta"))
    throw InputError("truth file needs 'phi' and 'theta'");
  TruthFile t;
  t.phi = json_vector(j["phi"]);
  t.theta = SymMatrix(json_matrix(j["theta"]));
  if (t.theta.dim() != t.phi.size()) throw InputError("truth file: phi/theta size mismatch");
  return t;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace cfa
