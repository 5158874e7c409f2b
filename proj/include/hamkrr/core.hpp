#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hamkrr {

/// A point z = (q, p) in phase space R^{2d}. Positions first, then momenta.
using PhasePoint = Eigen::VectorXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Rejected input: bad shapes, out-of-range parameters, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejected computation: failed factorization, non-finite states.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

inline void require_same_dim(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw ValidationError("dimension mismatch: " + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()));
}

inline void require_phase_dim(Eigen::Index n) {
  if (n < 2 || n % 2 != 0)
    throw ValidationError("phase-space dimension must be even and >= 2, got " +
                          std::to_string(n));
}

}  // namespace hamkrr
