#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "hamkrr/core.hpp"

namespace hamkrr {

using VectorField = std::function<Vector(const Vector&)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> states;

  std::size_t size() const { return times.size(); }
  const PhasePoint& final_state() const { return states.back(); }
};

/// Fixed-step classical RK4 on [0, T]. The last step is shortened to land
/// exactly on T.
inline Trajectory integrate(const VectorField& field, const PhasePoint& z0,
                            double horizon, double dt) {
  require(horizon > 0.0 && std::isfinite(horizon), "integrate: T must be > 0");
  require(dt > 0.0 && dt <= horizon, "integrate: need 0 < dt <= T");
  require(z0.allFinite(), "integrate: initial state must be finite");

  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(z0);

  Vector z = z0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t_next = (k + 1 == steps) ? horizon : static_cast<double>(k + 1) * dt;
    const double h = t_next - t;
    const Vector k1 = field(z);
    const Vector k2 = field(z + 0.5 * h * k1);
    const Vector k3 = field(z + 0.5 * h * k2);
    const Vector k4 = field(z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite())
      throw NumericalError("integrate: non-finite state at t = " +
                           std::to_string(t_next));
    traj.times.push_back(t_next);
    traj.states.push_back(z);
  }
  return traj;
}

/// max_t |F_t(z0) - F'_t(z0)| over the shared RK4 time grid.
inline double flow_sup_error(const VectorField& true_field,
                             const VectorField& learned_field,
                             const PhasePoint& z0, double horizon, double dt) {
  const Trajectory a = integrate(true_field, z0, horizon, dt);
  const Trajectory b = integrate(learned_field, z0, horizon, dt);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, (a.states[i] - b.states[i]).norm());
  return worst;
}

/// Columns t,q1..qd,p1..pd.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index dim = traj.states.empty() ? 0 : traj.states.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < dim / 2; ++i) out << ",q" << i + 1;
  for (Eigen::Index i = 0; i < dim / 2; ++i) out << ",p" << i + 1;
  out << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << traj.times[k];
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << traj.states[k][i];
    out << '\n';
  }
}

}  // namespace hamkrr
