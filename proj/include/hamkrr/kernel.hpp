#pragma once

#include <cmath>
#include <concepts>

#include "hamkrr/core.hpp"

namespace hamkrr {

/// A Mercer kernel with analytic first and mixed second derivatives.
///
/// `grad1(x, y)` is the gradient of K in its first argument; `cross(x, y)`
/// has entries d^2 K / dx_i dy_j. The estimator only needs these three
/// primitives, so any smooth kernel providing them can be plugged in.
template <typename K>
concept DifferentiableKernel = requires(const K& k, const Vector& x) {
  { k.eval(x, x) } -> std::convertible_to<double>;
  { k.grad1(x, x) } -> std::convertible_to<Vector>;
  { k.cross(x, x) } -> std::convertible_to<Matrix>;
};

struct KernelParams {
  double eta = 1.0;

  explicit KernelParams(double bandwidth) : eta(bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw ValidationError("kernel bandwidth eta must be > 0");
  }
};

/// K(x, y) = exp(-|x - y|^2 / eta^2).
class GaussianKernel {
 public:
  explicit GaussianKernel(KernelParams params)
      : params_(params), inv_eta2_(1.0 / (params.eta * params.eta)) {}
  explicit GaussianKernel(double eta) : GaussianKernel(KernelParams(eta)) {}

  const KernelParams& params() const { return params_; }
  double eta() const { return params_.eta; }

  double eval(const Vector& x, const Vector& y) const {
    require_same_dim(x, y);
    return std::exp(-(x - y).squaredNorm() * inv_eta2_);
  }

  Vector grad1(const Vector& x, const Vector& y) const {
    require_same_dim(x, y);
    const Vector diff = x - y;
    const double k = std::exp(-diff.squaredNorm() * inv_eta2_);
    return (-2.0 * inv_eta2_ * k) * diff;
  }

  Matrix cross(const Vector& x, const Vector& y) const {
    require_same_dim(x, y);
    const Vector diff = x - y;
    const double k = std::exp(-diff.squaredNorm() * inv_eta2_);
    Matrix out = (-4.0 * inv_eta2_ * inv_eta2_ * k) * (diff * diff.transpose());
    out.diagonal().array() += 2.0 * inv_eta2_ * k;
    return out;
  }

  /// Writes cross(x, y) into a preallocated block without temporaries.
  template <typename Block>
  void cross_into(const Vector& x, const Vector& y, Block&& out) const {
    const Eigen::Index n = x.size();
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sq += (x[i] - y[i]) * (x[i] - y[i]);
    const double k = std::exp(-sq * inv_eta2_);
    const double a = 2.0 * inv_eta2_ * k;
    const double b = -4.0 * inv_eta2_ * inv_eta2_ * k;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dj = x[j] - y[j];
      for (Eigen::Index i = 0; i < n; ++i) {
        out(i, j) = b * (x[i] - y[i]) * dj + (i == j ? a : 0.0);
      }
    }
  }

 private:
  KernelParams params_;
  double inv_eta2_;
};

static_assert(DifferentiableKernel<GaussianKernel>);

}  // namespace hamkrr
