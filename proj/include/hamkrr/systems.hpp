#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamkrr/core.hpp"
#include "hamkrr/gram.hpp"
#include "hamkrr/random.hpp"

namespace hamkrr {

/// A Hamiltonian H on R^{2d} with its analytic gradient.
class HamiltonianSystem {
 public:
  using ScalarFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  HamiltonianSystem(std::string name, Eigen::Index d,
                    std::map<std::string, double> params, ScalarFn h,
                    GradFn grad)
      : name_(std::move(name)),
        d_(d),
        params_(std::move(params)),
        h_(std::move(h)),
        grad_(std::move(grad)) {}

  const std::string& name() const { return name_; }
  Eigen::Index d() const { return d_; }
  const std::map<std::string, double>& params() const { return params_; }

  double h(const Vector& z) const {
    check(z);
    return h_(z);
  }
  Vector grad_h(const Vector& z) const {
    check(z);
    return grad_(z);
  }
  /// X_H(z) = J grad H(z).
  Vector field(const Vector& z) const { return apply_J(grad_h(z)); }

 private:
  void check(const Vector& z) const {
    if (z.size() != 2 * d_)
      throw ValidationError(name_ + ": expected phase point of dimension " +
                            std::to_string(2 * d_) + ", got " +
                            std::to_string(z.size()));
  }

  std::string name_;
  Eigen::Index d_;
  std::map<std::string, double> params_;
  ScalarFn h_;
  GradFn grad_;
};

namespace detail {

inline double param_or(const std::map<std::string, double>& params,
                       const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline void reject_unknown(const std::map<std::string, double>& params,
                           std::initializer_list<const char*> allowed,
                           const std::string& system) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw ValidationError("unknown parameter '" + key + "' for system " +
                            system);
    if (!std::isfinite(value))
      throw ValidationError("parameter '" + key + "' must be finite");
  }
}

inline HamiltonianSystem double_pendulum(std::map<std::string, double> params) {
  reject_unknown(params, {"m", "l", "g"}, "double_pendulum");
  const double m = param_or(params, "m", 1.0);
  const double l = param_or(params, "l", 1.0);
  const double g = param_or(params, "g", 1.0);
  require(m > 0.0 && l > 0.0, "double_pendulum: m and l must be > 0");
  params = {{"m", m}, {"l", l}, {"g", g}};
  const double inertia = m * l * l;
  const double weight = m * g * l;

  auto h = [=](const Vector& z) {
    const double delta = z[0] - z[1];
    const double s = std::sin(delta), c = std::cos(delta);
    const double num = z[2] * z[2] + 2.0 * z[3] * z[3] - 2.0 * z[2] * z[3] * c;
    return num / (2.0 * inertia * (1.0 + s * s)) +
           weight * (4.0 - 2.0 * std::cos(z[0]) - std::cos(z[1]));
  };
  auto grad = [=](const Vector& z) {
    const double delta = z[0] - z[1];
    const double s = std::sin(delta), c = std::cos(delta);
    const double p1 = z[2], p2 = z[3];
    const double num = p1 * p1 + 2.0 * p2 * p2 - 2.0 * p1 * p2 * c;
    const double den = 1.0 + s * s;
    // d(kinetic)/d(delta); delta enters through cos in num and sin^2 in den.
    const double dkin = (2.0 * p1 * p2 * s * den - num * 2.0 * s * c) /
                        (2.0 * inertia * den * den);
    Vector out(4);
    out << dkin + 2.0 * weight * std::sin(z[0]),
        -dkin + weight * std::sin(z[1]),
        (2.0 * p1 - 2.0 * p2 * c) / (2.0 * inertia * den),
        (4.0 * p2 - 2.0 * p1 * c) / (2.0 * inertia * den);
    return out;
  };
  return {"double_pendulum", 2, std::move(params), h, grad};
}

inline HamiltonianSystem henon_heiles(const std::map<std::string, double>& params) {
  reject_unknown(params, {}, "henon_heiles");
  auto h = [](const Vector& z) {
    const double q1 = z[0], q2 = z[1];
    return 0.5 * (z[2] * z[2] + z[3] * z[3]) + 0.5 * (q1 * q1 + q2 * q2) +
           q1 * q1 * q2 + q2 * q2 * q2 / 3.0;
  };
  auto grad = [](const Vector& z) {
    const double q1 = z[0], q2 = z[1];
    Vector out(4);
    out << q1 + 2.0 * q1 * q2, q2 + q1 * q1 + q2 * q2, z[2], z[3];
    return out;
  };
  return {"henon_heiles", 2, {}, h, grad};
}

inline HamiltonianSystem frenkel_kontorova(std::map<std::string, double> params) {
  reject_unknown(params, {"g"}, "frenkel_kontorova");
  const double g = param_or(params, "g", 1.0);
  params = {{"g", g}};
  auto h = [=](const Vector& z) {
    const double gap = z[1] - z[0];
    return 0.5 * (z[2] * z[2] + z[3] * z[3]) - std::cos(z[0]) -
           std::cos(z[1]) + 0.5 * g * gap * gap;
  };
  auto grad = [=](const Vector& z) {
    const double gap = z[1] - z[0];
    Vector out(4);
    out << std::sin(z[0]) - g * gap, std::sin(z[1]) + g * gap, z[2], z[3];
    return out;
  };
  return {"frenkel_kontorova", 2, std::move(params), h, grad};
}

// sin(r)/r and (d/dr)(sin(r)/r) / r, with Taylor branches near r = 0 where
// the closed forms cancel catastrophically.
inline constexpr double kSincSeriesRadius = 1e-3;

inline double sinc(double r) {
  if (r < kSincSeriesRadius) {
    const double r2 = r * r;
    return 1.0 - r2 / 6.0 + r2 * r2 / 120.0;
  }
  return std::sin(r) / r;
}

inline double sinc_slope_over_r(double r) {
  if (r < kSincSeriesRadius) {
    const double r2 = r * r;
    return -1.0 / 3.0 + r2 / 30.0 - r2 * r2 / 840.0;
  }
  return (r * std::cos(r) - std::sin(r)) / (r * r * r);
}

inline HamiltonianSystem nonconvex(const std::map<std::string, double>& params) {
  reject_unknown(params, {}, "nonconvex");
  constexpr double a = 2.0 * std::numbers::pi / 3.0;
  auto h = [](const Vector& z) {
    const double r = std::hypot(z[0], z[1]);
    return 0.5 * (z[2] * z[2] + z[3] * z[3]) +
           std::sin(a * z[0]) * std::cos(a * z[1]) + sinc(r);
  };
  auto grad = [](const Vector& z) {
    const double r = std::hypot(z[0], z[1]);
    const double radial = sinc_slope_over_r(r);
    Vector out(4);
    out << a * std::cos(a * z[0]) * std::cos(a * z[1]) + radial * z[0],
        -a * std::sin(a * z[0]) * std::sin(a * z[1]) + radial * z[1], z[2],
        z[3];
    return out;
  };
  return {"nonconvex", 2, {}, h, grad};
}

// Singular at q = 0: h is -inf and the gradient non-finite there.
inline HamiltonianSystem two_body(const std::map<std::string, double>& params) {
  reject_unknown(params, {}, "two_body");
  auto h = [](const Vector& z) {
    return 0.5 * (z[2] * z[2] + z[3] * z[3]) - 1.0 / std::hypot(z[0], z[1]);
  };
  auto grad = [](const Vector& z) {
    const double r = std::hypot(z[0], z[1]);
    const double r3 = r * r * r;
    Vector out(4);
    out << z[0] / r3, z[1] / r3, z[2], z[3];
    return out;
  };
  return {"two_body", 2, {}, h, grad};
}

}  // namespace detail

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "double_pendulum", "henon_heiles", "frenkel_kontorova", "nonconvex",
      "two_body"};
  return names;
}

inline HamiltonianSystem builtin(const std::string& name,
                                 const std::map<std::string, double>& params = {}) {
  if (name == "double_pendulum") return detail::double_pendulum(params);
  if (name == "henon_heiles") return detail::henon_heiles(params);
  if (name == "frenkel_kontorova") return detail::frenkel_kontorova(params);
  if (name == "nonconvex") return detail::nonconvex(params);
  if (name == "two_body") return detail::two_body(params);
  std::string known;
  for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
  throw ValidationError("unknown system '" + name + "' (known: " + known + ")");
}

/// Axis-aligned sampling box, one [lo, hi] pair per phase coordinate.
using Box = std::vector<std::pair<double, double>>;

inline Box uniform_box(Eigen::Index dim, double lo, double hi) {
  return Box(static_cast<std::size_t>(dim), {lo, hi});
}

/// Training data: N phase points with observed vector-field values.
struct Dataset {
  Eigen::Index d = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> system;
  Box box;
  std::vector<PhasePoint> points;
  std::vector<Vector> observations;

  Eigen::Index n() const { return static_cast<Eigen::Index>(points.size()); }

  /// Throws ValidationError on any shape or range violation.
  void validate() const {
    require(d >= 1, "dataset: d must be >= 1");
    require(sigma >= 0.0 && std::isfinite(sigma), "dataset: sigma must be >= 0");
    require(!points.empty(), "dataset: N must be >= 1");
    require(points.size() == observations.size(),
            "dataset: " + std::to_string(points.size()) + " points but " +
                std::to_string(observations.size()) + " observations");
    for (std::size_t i = 0; i < points.size(); ++i) {
      require(points[i].size() == 2 * d && observations[i].size() == 2 * d,
              "dataset: row " + std::to_string(i) +
                  " does not have length 2d = " + std::to_string(2 * d));
      require(points[i].allFinite() && observations[i].allFinite(),
              "dataset: row " + std::to_string(i) + " is not finite");
    }
    require(box.empty() || box.size() == static_cast<std::size_t>(2 * d),
            "dataset: box must have 2d intervals");
    for (const auto& [lo, hi] : box) require(lo <= hi, "dataset: box lo > hi");
  }

  /// Observations stacked into one 2dN vector.
  Vector stacked_observations() const {
    const Eigen::Index m = 2 * d;
    Vector x(m * n());
    for (Eigen::Index i = 0; i < n(); ++i)
      x.segment(i * m, m) = observations[static_cast<std::size_t>(i)];
    return x;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out{d, sigma, seed, system, box, {}, {}};
    out.points.reserve(rows.size());
    out.observations.reserve(rows.size());
    for (std::size_t r : rows) {
      out.points.push_back(points.at(r));
      out.observations.push_back(observations.at(r));
    }
    return out;
  }
};

struct SamplingOptions {
  /// Resample points whose |q| is below this radius (0 disables).
  double exclusion_radius = 0.0;
};

/// Points i.i.d. uniform on the box; observations J grad H + N(0, sigma^2 I).
/// Each point is drawn coordinate by coordinate, followed by its noise
/// vector, from a single PortableRng stream.
inline Dataset sample_dataset(const HamiltonianSystem& system, Eigen::Index n,
                              const Box& box, double sigma, std::uint64_t seed,
                              SamplingOptions options = {}) {
  const Eigen::Index dim = 2 * system.d();
  require(n >= 1, "sample_dataset: N must be >= 1");
  require(box.size() == static_cast<std::size_t>(dim),
          "sample_dataset: box must have " + std::to_string(dim) + " intervals");
  for (const auto& [lo, hi] : box)
    require(lo <= hi && std::isfinite(lo) && std::isfinite(hi),
            "sample_dataset: box intervals must be finite with lo <= hi");
  require(sigma >= 0.0 && std::isfinite(sigma), "sample_dataset: sigma must be >= 0");
  require(options.exclusion_radius >= 0.0, "exclusion radius must be >= 0");

  PortableRng rng(seed);
  Dataset data{system.d(), sigma, seed, system.name(), box, {}, {}};
  data.points.reserve(static_cast<std::size_t>(n));
  data.observations.reserve(static_cast<std::size_t>(n));
  constexpr int kMaxRejections = 1000000;
  for (Eigen::Index i = 0; i < n; ++i) {
    PhasePoint z(dim);
    for (int attempt = 0;; ++attempt) {
      for (Eigen::Index k = 0; k < dim; ++k)
        z[k] = rng.uniform(box[static_cast<std::size_t>(k)].first,
                           box[static_cast<std::size_t>(k)].second);
      if (options.exclusion_radius <= 0.0 ||
          z.head(system.d()).norm() >= options.exclusion_radius)
        break;
      if (attempt > kMaxRejections)
        throw ValidationError("exclusion radius rejects the whole box");
    }
    // Noise is drawn even when sigma = 0 so that every sigma shares the same
    // phase points for a given seed.
    Vector x = system.field(z);
    for (Eigen::Index k = 0; k < dim; ++k) x[k] += sigma * rng.normal();
    data.points.push_back(std::move(z));
    data.observations.push_back(std::move(x));
  }
  return data;
}

}  // namespace hamkrr
