#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamkrr/core.hpp"
#include "hamkrr/gram.hpp"
#include "hamkrr/kernel.hpp"
#include "hamkrr/systems.hpp"

namespace hamkrr {

/// Normal-equation residual tolerance enforced at fit time.
inline constexpr double kFitResidualTolerance = 1e-8;

/// The structure-preserving kernel ridge solution
///
///   h(z) = sum_i < c_i, grad_1 K(z_i, z) >,
///   c = (G + lambda N I)^{-1} J^T X,
///
/// where G is the differential Gram matrix of the training points.
template <DifferentiableKernel Kernel>
struct BasicFittedModel {
  Kernel kernel;
  double lambda = 0.0;
  Eigen::Index d = 0;
  std::vector<PhasePoint> train_points;
  Vector coeffs;
  /// Relative residual of the normal equations measured at fit time.
  double residual = 0.0;

  Eigen::Index n() const { return static_cast<Eigen::Index>(train_points.size()); }

  /// The 2d-block of coefficients attached to training point i.
  auto block(Eigen::Index i) const { return coeffs.segment(2 * d * i, 2 * d); }

  void check_query(const Vector& z) const {
    if (z.size() != 2 * d)
      throw ValidationError("query point has dimension " +
                            std::to_string(z.size()) + ", model expects " +
                            std::to_string(2 * d));
  }
};

using FittedModel = BasicFittedModel<GaussianKernel>;

template <DifferentiableKernel Kernel>
BasicFittedModel<Kernel> fit(const Dataset& data, const Kernel& kernel,
                             double lambda) {
  data.validate();
  require(lambda > 0.0 && std::isfinite(lambda), "fit: lambda must be > 0");
  const DifferentialGram gram = assemble_gram(kernel, std::span(data.points));
  const Vector rhs =
      SymplecticBlocks(data.d, data.n()).apply_transpose(data.stacked_observations());
  Vector coeffs = solve_regularized(gram, lambda, rhs, kFitResidualTolerance);
  const double residual = regularized_residual(gram, lambda, coeffs, rhs);
  if (!(residual <= kFitResidualTolerance)) {
    throw NumericalError("fit: normal-equation residual " +
                         std::to_string(residual) + " exceeds tolerance");
  }
  return {kernel, lambda, data.d, data.points, std::move(coeffs), residual};
}

/// lambda = c * N^{-alpha}.
inline double scaled_lambda(double c, Eigen::Index n, double alpha) {
  require(c > 0.0, "regularization constant c must be > 0");
  require(n >= 1, "sample count must be >= 1");
  return c * std::pow(static_cast<double>(n), -alpha);
}

template <DifferentiableKernel Kernel>
double predict_h(const BasicFittedModel<Kernel>& model, const Vector& z) {
  model.check_query(z);
  double h = 0.0;
  for (Eigen::Index i = 0; i < model.n(); ++i)
    h += model.block(i).dot(
        model.kernel.grad1(model.train_points[static_cast<std::size_t>(i)], z));
  return h;
}

/// Exact gradient: sum_i cross(z_i, z)^T c_i.
template <DifferentiableKernel Kernel>
Vector predict_grad(const BasicFittedModel<Kernel>& model, const Vector& z) {
  model.check_query(z);
  Vector g = Vector::Zero(z.size());
  for (Eigen::Index i = 0; i < model.n(); ++i)
    g.noalias() +=
        model.kernel.cross(model.train_points[static_cast<std::size_t>(i)], z)
            .transpose() *
        model.block(i);
  return g;
}

/// J grad h, a Hamiltonian vector field by construction.
template <DifferentiableKernel Kernel>
Vector predict_field(const BasicFittedModel<Kernel>& model, const Vector& z) {
  return apply_J(predict_grad(model, z));
}

/// Regularized empirical risk
///   (1/N) sum_n |X_h(z_n) - x_n|^2 + lambda |h|^2
/// of the representer function with coefficients `coeffs` on the model's
/// training set. The RKHS norm of such a function is c^T G c.
template <DifferentiableKernel Kernel>
double regularized_risk(const BasicFittedModel<Kernel>& model,
                        const Dataset& data, const Vector& coeffs) {
  const DifferentialGram gram =
      assemble_gram(model.kernel, std::span(model.train_points));
  require(coeffs.size() == gram.dim(), "coefficient length mismatch");
  require(data.n() == model.n(), "dataset does not match the model's training set");
  const Vector grads = gram.matrix * coeffs;
  const Vector fields = SymplecticBlocks(model.d, model.n()).apply(grads);
  const double data_term =
      (fields - data.stacked_observations()).squaredNorm() /
      static_cast<double>(model.n());
  return data_term + model.lambda * coeffs.dot(gram.matrix * coeffs);
}

/// Gaussian-process posterior for H ~ GP(0, K) given noisy observations of
/// X_H with noise variance sigma^2 per coordinate.
///
/// The covariance of the observations is J G J^T + sigma^2 I. Since J is
/// orthogonal its inverse is J (G + sigma^2 I)^{-1} J^T, so only G + sigma^2 I
/// is factorized. The cross-covariance between X_H(z_n) and H(z*) is
/// J grad_1 K(z_n, z*).
template <DifferentiableKernel Kernel>
class BasicGPPosterior {
 public:
  BasicGPPosterior(const Dataset& data, Kernel kernel, double noise_sigma2)
      : kernel_(std::move(kernel)),
        noise_sigma2_(noise_sigma2),
        d_((data.validate(), data.d)),
        train_points_(data.points),
        factor_(assemble_gram(kernel_, std::span(train_points_)).matrix,
                checked_noise(noise_sigma2), /*allow_jitter=*/noise_sigma2 > 0.0) {
    // (J G J^T + s I)^{-1} X = J (G + s I)^{-1} J^T X.
    const SymplecticBlocks jj(d_, data.n());
    weights_ = factor_.solve(jj.apply_transpose(data.stacked_observations()));
  }

  double noise_sigma2() const { return noise_sigma2_; }
  const Kernel& kernel() const { return kernel_; }

  double mean(const Vector& z) const {
    check_query(z);
    // r^T J (G + s I)^{-1} J^T X with r = J g reduces to g^T weights.
    return stacked_grad1(z).dot(weights_);
  }

  /// K(z*, z*) - r^T (J G J^T + s I)^{-1} r, evaluated as
  /// K(z*, z*) - |L^{-1} g|^2 with L the Cholesky factor of G + s I.
  double variance(const Vector& z) const {
    check_query(z);
    const Vector v = factor_.half_solve(stacked_grad1(z));
    return kernel_.eval(z, z) - v.squaredNorm();
  }

 private:
  static double checked_noise(double s) {
    require(s >= 0.0 && std::isfinite(s), "noise variance must be >= 0");
    return s;
  }

  void check_query(const Vector& z) const {
    if (z.size() != 2 * d_)
      throw ValidationError("query point has dimension " +
                            std::to_string(z.size()) + ", expected " +
                            std::to_string(2 * d_));
  }

  Vector stacked_grad1(const Vector& z) const {
    const Eigen::Index m = 2 * d_;
    Vector g(m * static_cast<Eigen::Index>(train_points_.size()));
    for (std::size_t i = 0; i < train_points_.size(); ++i)
      g.segment(static_cast<Eigen::Index>(i) * m, m) =
          kernel_.grad1(train_points_[i], z);
    return g;
  }

  Kernel kernel_;
  double noise_sigma2_;
  Eigen::Index d_;
  std::vector<PhasePoint> train_points_;
  ShiftedCholesky factor_;
  Vector weights_;
};

using GPPosterior = BasicGPPosterior<GaussianKernel>;

}  // namespace hamkrr
