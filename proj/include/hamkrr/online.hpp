#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hamkrr/core.hpp"
#include "hamkrr/estimator.hpp"
#include "hamkrr/gram.hpp"
#include "hamkrr/kernel.hpp"

namespace hamkrr {

/// Streaming ridge regression under the schedule lambda(N) * N = C.
///
/// Keeps inv = (G_N + C I)^{-1}. With b the 2dN x 2d column of cross blocks
/// between old points and the new one, A = cross(z, z) + C I and the Schur
/// complement D = A - b^T inv b, the grown inverse is
///
///   [ inv + inv b D^{-1} b^T inv   -inv b D^{-1} ]
///   [ -D^{-1} b^T inv               D^{-1}       ]
///
/// Only the 2d x 2d matrix D is ever inverted. Fixed-lambda streaming would
/// need (G_N + lambda(N+1) I)^{-1} at every step and is not offered.
///
/// Updates mutate state and must be serialized by the caller.
template <DifferentiableKernel Kernel>
class BasicOnlineRegressor {
 public:
  struct Counters {
    std::uint64_t updates = 0;
    /// Inversions of matrices larger than 2d x 2d. Stays at zero.
    std::uint64_t full_inversions = 0;
    /// Entries of the stored inverse written by the last update.
    std::uint64_t last_update_writes = 0;
  };

  BasicOnlineRegressor(double c, Kernel kernel, const PhasePoint& first_point,
                       const Vector& first_obs)
      : kernel_(std::move(kernel)), c_(c) {
    require(c > 0.0 && std::isfinite(c), "online: C must be > 0");
    require_phase_dim(first_point.size());
    require_same_dim(first_point, first_obs);
    d_ = first_point.size() / 2;
    Matrix a = kernel_.cross(first_point, first_point);
    a.diagonal().array() += c_;
    inv_ = invert_small(a);
    points_.push_back(first_point);
    observations_.push_back(first_obs);
  }

  void update(const PhasePoint& z, const Vector& x) {
    if (z.size() != 2 * d_ || x.size() != 2 * d_)
      throw ValidationError("online update: expected dimension " +
                            std::to_string(2 * d_));
    const Eigen::Index m = 2 * d_;
    const Eigen::Index old_dim = inv_.rows();

    Matrix b(old_dim, m);
    for (std::size_t i = 0; i < points_.size(); ++i)
      b.middleRows(static_cast<Eigen::Index>(i) * m, m) = kernel_.cross(points_[i], z);
    Matrix a = kernel_.cross(z, z);
    a.diagonal().array() += c_;

    const Matrix inv_b = inv_ * b;
    Matrix schur = a - b.transpose() * inv_b;
    schur = 0.5 * (schur + schur.transpose());
    const Matrix schur_inv = invert_small(schur);
    const Matrix inv_b_s = inv_b * schur_inv;

    Matrix grown(old_dim + m, old_dim + m);
    grown.topLeftCorner(old_dim, old_dim) = inv_;
    grown.topLeftCorner(old_dim, old_dim).noalias() += inv_b_s * inv_b.transpose();
    grown.topRightCorner(old_dim, m) = -inv_b_s;
    grown.bottomLeftCorner(m, old_dim) = -inv_b_s.transpose();
    grown.bottomRightCorner(m, m) = schur_inv;
    inv_ = std::move(grown);

    points_.push_back(z);
    observations_.push_back(x);
    ++counters_.updates;
    counters_.last_update_writes =
        static_cast<std::uint64_t>(inv_.rows()) * static_cast<std::uint64_t>(inv_.cols());
  }

  /// c_N = inv J^T X, equal to the batch fit with lambda = C / N.
  Vector coeffs() const {
    return inv_ * SymplecticBlocks(d_, n()).apply_transpose(stacked_observations());
  }

  /// The equivalent batch model at the current sample size.
  BasicFittedModel<Kernel> model() const {
    return {kernel_, lambda(), d_, points_, coeffs(), 0.0};
  }

  Eigen::Index n() const { return static_cast<Eigen::Index>(points_.size()); }
  Eigen::Index d() const { return d_; }
  double c() const { return c_; }
  double lambda() const { return c_ / static_cast<double>(n()); }
  const Matrix& inverse() const { return inv_; }
  const std::vector<PhasePoint>& points() const { return points_; }
  const std::vector<Vector>& observations() const { return observations_; }
  const Counters& counters() const { return counters_; }

 private:
  Vector stacked_observations() const {
    const Eigen::Index m = 2 * d_;
    Vector x(m * n());
    for (std::size_t i = 0; i < observations_.size(); ++i)
      x.segment(static_cast<Eigen::Index>(i) * m, m) = observations_[i];
    return x;
  }

  static Matrix invert_small(const Matrix& sym) {
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all())
      throw NumericalError(
          "online update: Schur complement is numerically singular");
    return llt.solve(Matrix::Identity(sym.rows(), sym.cols()));
  }

  Kernel kernel_;
  double c_;
  Eigen::Index d_ = 0;
  Matrix inv_;
  std::vector<PhasePoint> points_;
  std::vector<Vector> observations_;
  Counters counters_;
};

using OnlineRegressor = BasicOnlineRegressor<GaussianKernel>;

}  // namespace hamkrr
