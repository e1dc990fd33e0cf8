#include "cfa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include "cfa/errors.hpp"

namespace cfa {

namespace {

// Below this size Eigen's tridiagonal QR beats the LAPACK call overhead.
constexpr Eigen::Index kLapackMinDim = 24;

void require_finite(const Eigen::MatrixXd& a) {
  if (!all_finite(a)) throw InputError("matrix has non-finite entries");
}

void lapack_eig(Eigen::MatrixXd& vecs, Eigen::VectorXd& asc, bool want_vectors) {
  const lapack_int p = static_cast<lapack_int>(vecs.rows());
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', p, vecs.data(), p, asc.data());
  if (info != 0) throw Error("dsyevd failed with info=" + std::to_string(info));
}

// Some optimized BLAS builds return wrong eigenvectors on CPUs they misdetect. Decompose a
// fixed test matrix once and fall back to Eigen if the result does not reconstruct it.
bool lapack_usable() {
  static const bool ok = [] {
    const Eigen::Index n = 160;
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        a(i, j) = std::sin(0.37 * static_cast<double>(i * n + j)) +
                  std::sin(0.37 * static_cast<double>(j * n + i));
    Eigen::MatrixXd v = a;
    Eigen::VectorXd w(n);
    try {
      lapack_eig(v, w, true);
    } catch (const Error&) {
      return false;
    }
    const double err = (v * w.asDiagonal() * v.transpose() - a).norm();
    const bool good = std::isfinite(err) && err <= 1e-9 * a.norm();
    if (!good) {
      std::fprintf(stderr,
                   "[cfa warn] LAPACK dsyevd failed a self-check (reconstruction error %.3g); "
                   "using Eigen for all eigendecompositions\n",
                   err);
    }
    return good;
  }();
  return ok;
}

EigenPairs eig_impl(const Eigen::MatrixXd& a, bool want_vectors) {
  require_finite(a);
  const Eigen::Index p = a.rows();
  if (a.cols() != p) throw InputError("matrix is not square");
  EigenPairs out;
  if (p == 0) return out;
  Eigen::VectorXd asc(p);
  Eigen::MatrixXd vecs;
  if (p < kLapackMinDim || !lapack_usable()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        a, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    asc = es.eigenvalues();
    if (want_vectors) vecs = es.eigenvectors();
  } else {
    vecs = a;
    lapack_eig(vecs, asc, want_vectors);
    if (!want_vectors) vecs.resize(0, 0);
  }
  out.values = asc.reverse();
  if (want_vectors) out.vectors = vecs.rowwise().reverse();
  return out;
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& u, const Eigen::VectorXd& vals) {
  return u * vals.asDiagonal() * u.transpose();
}

}  // namespace

bool all_finite(const Eigen::MatrixXd& a) { return a.allFinite(); }

SymMatrix::SymMatrix(const Eigen::MatrixXd& a) : m_(a) {
  if (a.rows() != a.cols()) throw InputError("SymMatrix requires a square matrix");
  m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SymMatrix::SymMatrix(Eigen::MatrixXd&& a) : m_(std::move(a)) {
  if (m_.rows() != m_.cols()) throw InputError("SymMatrix requires a square matrix");
  m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SymMatrix SymMatrix::identity(Eigen::Index p) {
  return SymMatrix(Eigen::MatrixXd::Identity(p, p));
}

SymMatrix SymMatrix::zero(Eigen::Index p) { return SymMatrix(Eigen::MatrixXd::Zero(p, p)); }

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::minus_diag(const Eigen::VectorXd& d) const {
  if (d.size() != dim()) throw InputError("diagonal length does not match matrix dimension");
  SymMatrix out = *this;
  out.m_.diagonal() -= d;
  return out;
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.m_ + b.m_); }
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.m_ - b.m_); }
SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }

EigenPairs sym_eigen(const Eigen::MatrixXd& a) { return eig_impl(a, true); }
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) { return eig_impl(a, false).values; }
EigenPairs sym_eigen(const SymMatrix& a) { return eig_impl(a.mat(), true); }
Eigen::VectorXd sym_eigenvalues(const SymMatrix& a) { return eig_impl(a.mat(), false).values; }

double schatten_q(const SymMatrix& a, double q) {
  if (!(q >= 1.0)) throw InputError("Schatten norm requires q >= 1");
  const Eigen::VectorXd lam = sym_eigenvalues(a);
  if (q == 1.0) return lam.cwiseAbs().sum();
  return std::pow(lam.cwiseAbs().array().pow(q).sum(), 1.0 / q);
}

SymMatrix psd_project(const SymMatrix& a) {
  const EigenPairs e = sym_eigen(a);
  return SymMatrix(reconstruct(e.vectors, e.values.cwiseMax(0.0)));
}

SymMatrix psd_power(const SymMatrix& a, double q) {
  if (!(q >= 1.0)) throw InputError("psd_power requires q >= 1");
  const EigenPairs e = sym_eigen(a);
  if (e.values.size() == 0) return a;
  const double top = std::max(e.values(0), 0.0);
  const double bottom = e.values(e.values.size() - 1);
  if (bottom < -1e-6 * std::max(top, 1.0)) throw NotPSDError("psd_power: matrix is not PSD");
  Eigen::VectorXd powered = e.values.cwiseMax(0.0);
  if (q != 1.0) powered = powered.array().pow(q).matrix();
  return SymMatrix(reconstruct(e.vectors, powered));
}

SymMatrix best_rank_r(const SymMatrix& a, int r) {
  const Eigen::Index p = a.dim();
  if (r < 0 || r > p) throw InputError("best_rank_r: rank out of range");
  if (r == 0) return SymMatrix::zero(p);
  const EigenPairs e = sym_eigen(a);
  const Eigen::MatrixXd top = e.vectors.leftCols(r);
  return SymMatrix(reconstruct(top, e.values.head(r).cwiseMax(0.0)));
}

SymMatrix to_correlation(const SymMatrix& a) {
  const Eigen::VectorXd d = a.mat().diagonal();
  if (!all_finite(a.mat())) throw InputError("to_correlation: non-finite entries");
  if ((d.array() <= 0.0).any()) throw InputError("to_correlation: non-positive diagonal entry");
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd c = s.asDiagonal() * a.mat() * s.asDiagonal();
  c.diagonal().setOnes();
  return SymMatrix(std::move(c));
}

double trailing_sum(const Eigen::VectorXd& values_desc, int r) {
  const Eigen::Index p = values_desc.size();
  if (r >= p) return 0.0;
  return values_desc.tail(p - std::max(r, 0)).sum();
}

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double k) {
  const Eigen::Index n = v.size();
  if (k < 0.0 || k > static_cast<double>(n)) throw InputError("capped simplex: k out of range");
  auto mass = [&](double tau) { return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).sum(); };
  double lo = v.minCoeff() - 1.0;  // mass(lo) = n
  double hi = v.maxCoeff();        // mass(hi) = 0
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > k) lo = mid; else hi = mid;
  }
  double tau = 0.5 * (lo + hi);
  // Exact solve on the identified free set.
  double free_sum = 0.0, ones = 0.0;
  int free_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = v(i) - tau;
    if (x >= 1.0) ones += 1.0;
    else if (x > 0.0) { free_sum += v(i); ++free_count; }
  }
  if (free_count > 0) {
    const double exact = (free_sum - (k - ones)) / free_count;
    if (std::abs(exact - tau) < 1e-9 * (1.0 + std::abs(tau))) tau = exact;
  }
  return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

SymMatrix project_spectrahedron(const SymMatrix& a, double k) {
  const EigenPairs e = sym_eigen(a);
  return SymMatrix(reconstruct(e.vectors, project_capped_simplex(e.values, k)));
}

}  // namespace cfa
