#pragma once

#include <functional>
#include <utility>

#include "hamkrr/core.hpp"

namespace hamkrr::fd {

// Central-difference oracles. These exist to check the analytic derivative
// paths and are never used by the estimator itself.

inline constexpr double kFirstOrderStep = 1e-5;
inline constexpr double kSecondOrderStep = 1e-4;

using KernelFn = std::function<double(const Vector&, const Vector&)>;
using ScalarFn = std::function<double(const Vector&)>;
using FieldFn = std::function<Vector(const Vector&)>;

/// Gradient of f by central differences, O(step^2).
inline Vector gradient(const ScalarFn& f, const Vector& x,
                       double step = kFirstOrderStep) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + step;
    xm[i] = x[i] - step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

/// Jacobian of a vector field, column j = d f / d x_j.
inline Matrix jacobian(const FieldFn& f, const Vector& x,
                       double step = kFirstOrderStep) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * step);
    xp[j] = xm[j] = x[j];
  }
  return jac;
}

/// Finite-difference approximations of (grad_x K(x,y), d^2 K / dx_i dy_j).
/// The mixed partial uses the four-point stencil with one shared step.
inline std::pair<Vector, Matrix> reference_derivatives(
    const KernelFn& k, const Vector& x, const Vector& y,
    double grad_step = kFirstOrderStep, double cross_step = kSecondOrderStep) {
  require_same_dim(x, y);
  const Eigen::Index n = x.size();
  Vector grad = gradient([&](const Vector& xx) { return k(xx, y); }, x,
                         grad_step);

  Matrix cross(n, n);
  const double h = cross_step;
  Vector xs = x, ys = y;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto at = [&](double si, double sj) {
        xs[i] = x[i] + si;
        ys[j] = y[j] + sj;
        const double v = k(xs, ys);
        xs[i] = x[i];
        ys[j] = y[j];
        return v;
      };
      cross(i, j) =
          (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
    }
  }
  return {std::move(grad), std::move(cross)};
}

}  // namespace hamkrr::fd
