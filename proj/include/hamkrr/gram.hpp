#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "hamkrr/core.hpp"
#include "hamkrr/kernel.hpp"

namespace hamkrr {

/// The block-diagonal symplectic matrix diag(J, ..., J) with
/// J = [[0, I_d], [-I_d, 0]], applied without ever being formed.
class SymplecticBlocks {
 public:
  SymplecticBlocks(Eigen::Index d, Eigen::Index n) : d_(d), n_(n) {
    require(d >= 1, "half phase dimension d must be >= 1");
    require(n >= 1, "block count N must be >= 1");
  }

  Eigen::Index d() const { return d_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index dim() const { return 2 * d_ * n_; }

  /// (q, p) -> (p, -q) in every 2d block.
  Vector apply(const Vector& v) const { return apply_signed(v, 1.0); }

  /// J^T = -J: (q, p) -> (-p, q).
  Vector apply_transpose(const Vector& v) const {
    return apply_signed(v, -1.0);
  }

 private:
  Vector apply_signed(const Vector& v, double sign) const {
    if (v.size() != dim())
      throw ValidationError("symplectic apply: expected length " +
                            std::to_string(dim()) + ", got " +
                            std::to_string(v.size()));
    Vector out(v.size());
    for (Eigen::Index b = 0; b < n_; ++b) {
      const Eigen::Index off = 2 * d_ * b;
      out.segment(off, d_) = sign * v.segment(off + d_, d_);
      out.segment(off + d_, d_) = -sign * v.segment(off, d_);
    }
    return out;
  }

  Eigen::Index d_;
  Eigen::Index n_;
};

/// J applied to a single phase-space vector.
inline Vector apply_J(const Vector& v) {
  require_phase_dim(v.size());
  return SymplecticBlocks(v.size() / 2, 1).apply(v);
}

/// The 2dN x 2dN differential Gram matrix: block (n, m) = cross(z_n, z_m).
struct DifferentialGram {
  Matrix matrix;
  Eigen::Index d = 0;
  Eigen::Index n = 0;

  Eigen::Index dim() const { return matrix.rows(); }
};

inline void validate_points(std::span<const PhasePoint> points) {
  require(!points.empty(), "at least one phase point is required");
  const Eigen::Index dim = points.front().size();
  require_phase_dim(dim);
  for (const auto& p : points) {
    if (p.size() != dim)
      throw ValidationError("inconsistent phase-point dimensions: " +
                            std::to_string(dim) + " vs " +
                            std::to_string(p.size()));
  }
}

/// Only the upper block triangle is evaluated; the lower one is its mirror,
/// so the result is exactly symmetric.
template <DifferentiableKernel Kernel>
DifferentialGram assemble_gram(const Kernel& kernel,
                               std::span<const PhasePoint> points) {
  validate_points(points);
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  const Eigen::Index m = points.front().size();
  DifferentialGram gram{Matrix(n * m, n * m), m / 2, n};
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      auto block = gram.matrix.block(a * m, b * m, m, m);
      if constexpr (requires { kernel.cross_into(points[0], points[0], block); }) {
        kernel.cross_into(points[a], points[b], block);
      } else {
        block = kernel.cross(points[a], points[b]);
      }
      if (b != a)
        gram.matrix.block(b * m, a * m, m, m) = block.transpose();
    }
  }
  return gram;
}

/// Cholesky factorization of (S + shift*I) for a symmetric PSD matrix S.
///
/// If the factorization breaks down, a jitter of 1e-12 * trace(S)/dim is
/// added and escalated x10 up to three times before giving up.
class ShiftedCholesky {
 public:
  static constexpr int kMaxJitterEscalations = 3;

  ShiftedCholesky(const Matrix& sym, double shift, bool allow_jitter = true) {
    require(sym.rows() == sym.cols(), "matrix must be square");
    require(shift >= 0.0 && std::isfinite(shift), "shift must be >= 0");
    const Eigen::Index dim = sym.rows();
    Matrix work = sym;
    work.diagonal().array() += shift;
    pivot_floor_ = std::numeric_limits<double>::epsilon() * static_cast<double>(dim) *
                   std::max(work.diagonal().maxCoeff(), 0.0);
    llt_.compute(work);
    if (llt_.info() == Eigen::Success && positive_pivots()) return;

    if (!allow_jitter) {
      throw NumericalError(
          "covariance matrix is numerically singular (no noise term)");
    }
    const double base =
        1e-12 * std::max(sym.trace(), 1e-300) / static_cast<double>(dim);
    double jitter = base;
    for (int attempt = 0; attempt <= kMaxJitterEscalations; ++attempt) {
      Matrix trial = work;
      trial.diagonal().array() += jitter;
      llt_.compute(trial);
      if (llt_.info() == Eigen::Success && positive_pivots()) {
        jitter_ = jitter;
        return;
      }
      if (attempt < kMaxJitterEscalations) jitter *= 10.0;
    }
    std::ostringstream msg;
    msg << "Cholesky factorization failed after jitter escalation to "
        << jitter << " (dim " << dim << ", shift " << shift
        << ", trace " << sym.trace() << "); the system is too ill-conditioned";
    throw NumericalError(msg.str());
  }

  template <typename Rhs>
  auto solve(const Rhs& rhs) const {
    return llt_.solve(rhs);
  }

  /// L^{-1} v, for quadratic forms v^T (S + shift I)^{-1} v.
  Vector half_solve(const Vector& v) const {
    return llt_.matrixL().solve(v);
  }

  double jitter() const { return jitter_; }

 private:
  // Squared pivots at rounding level mean the matrix was singular.
  bool positive_pivots() const {
    const auto diag = llt_.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array().square() > pivot_floor_).all();
  }

  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
  double pivot_floor_ = 0.0;
};

/// Relative residual |A c - rhs| / |rhs| of A = G + lambda*N*I (0 if rhs = 0).
inline double regularized_residual(const DifferentialGram& gram, double lambda,
                                   const Vector& coeffs, const Vector& rhs) {
  const double shift = lambda * static_cast<double>(gram.n);
  const Vector r = gram.matrix * coeffs + shift * coeffs - rhs;
  const double scale = rhs.norm();
  return scale > 0.0 ? r.norm() / scale : r.norm();
}

/// Solves (G + lambda*N*I) c = rhs. One step of iterative refinement is
/// applied when the first residual exceeds `tolerance`.
inline Vector solve_regularized(const DifferentialGram& gram, double lambda,
                                const Vector& rhs, double tolerance = 1e-8) {
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
  if (rhs.size() != gram.dim())
    throw ValidationError("rhs length " + std::to_string(rhs.size()) +
                          " does not match Gram dimension " +
                          std::to_string(gram.dim()));
  const double shift = lambda * static_cast<double>(gram.n);
  const ShiftedCholesky factor(gram.matrix, shift);
  Vector c = factor.solve(rhs);
  if (regularized_residual(gram, lambda, c, rhs) > tolerance) {
    const Vector r = rhs - (gram.matrix * c + shift * c);
    c += factor.solve(r);
  }
  return c;
}

}  // namespace hamkrr
