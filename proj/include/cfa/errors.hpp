#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace cfa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input (shapes, non-finite entries, bad parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

// A matrix that must be positive semidefinite is not.
class NotPSDError : public Error {
 public:
  using Error::Error;
};

// A uniqueness vector lies outside {phi >= 0, Sigma - diag(phi) PSD}.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its iteration cap. Carries the best iterate seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best, int iterations)
      : Error(what), best_(std::move(best)), iterations_(iterations) {}

  const Eigen::VectorXd& best() const { return best_; }
  int iterations() const { return iterations_; }

 private:
  Eigen::VectorXd best_;
  int iterations_;
};

}  // namespace cfa
