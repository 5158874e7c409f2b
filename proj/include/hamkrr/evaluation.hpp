#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "hamkrr/core.hpp"
#include "hamkrr/estimator.hpp"
#include "hamkrr/random.hpp"
#include "hamkrr/systems.hpp"

namespace hamkrr {

/// Regular grid on the (q1, q2) plane with p = 0.
struct GridSpec {
  std::array<double, 2> lo{-1.0, -1.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<int, 2> resolution{50, 50};

  static GridSpec square(double lo, double hi, int resolution = 50) {
    return {{lo, lo}, {hi, hi}, {resolution, resolution}};
  }

  void validate() const {
    for (int a = 0; a < 2; ++a) {
      require(std::isfinite(lo[a]) && std::isfinite(hi[a]) && hi[a] > lo[a],
              "grid: need hi > lo on every axis");
      require(resolution[a] >= 2, "grid: resolution must be >= 2");
    }
  }

  /// Node coordinates along axis 0 (q1) or 1 (q2), endpoints included.
  std::vector<double> axis(int a) const {
    std::vector<double> out(static_cast<std::size_t>(resolution[a]));
    const double step = (hi[a] - lo[a]) / (resolution[a] - 1);
    for (int k = 0; k < resolution[a]; ++k)
      out[static_cast<std::size_t>(k)] = (k + 1 == resolution[a]) ? hi[a] : lo[a] + k * step;
    return out;
  }
};

using ScalarField = std::function<double(const Vector&)>;

/// h(q1, q2, 0, 0) with rows indexed by q2 and columns by q1. Non-finite
/// values (singular nodes) are stored as NaN.
inline Matrix potential_grid(const ScalarField& h, const GridSpec& grid) {
  grid.validate();
  const auto q1 = grid.axis(0);
  const auto q2 = grid.axis(1);
  Matrix out(grid.resolution[1], grid.resolution[0]);
  Vector z = Vector::Zero(4);
  for (int r = 0; r < grid.resolution[1]; ++r) {
    for (int c = 0; c < grid.resolution[0]; ++c) {
      z[0] = q1[static_cast<std::size_t>(c)];
      z[1] = q2[static_cast<std::size_t>(r)];
      const double v = h(z);
      out(r, c) = std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

struct ErrorReport {
  double shift = 0.0;
  /// |learned + shift - truth| per node, NaN where either grid is NaN.
  Matrix grid_abs_error;
  double sup_error = 0.0;
  double mean_error = 0.0;
  double rmse = 0.0;
  Eigen::Index valid_nodes = 0;
  Eigen::Index nan_nodes = 0;
};

/// Errors after shifting `learned` by the mean of (truth - learned) over the
/// nodes where both are defined. H is recoverable only up to a constant.
inline ErrorReport shifted_error(const Matrix& truth, const Matrix& learned) {
  require(truth.rows() == learned.rows() && truth.cols() == learned.cols(),
          "shifted_error: grid shapes differ");
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid =
      truth.array().isFinite() && learned.array().isFinite();
  ErrorReport rep;
  rep.valid_nodes = valid.count();
  rep.nan_nodes = truth.size() - rep.valid_nodes;
  if (rep.valid_nodes == 0)
    throw NumericalError("shifted_error: no node is defined on both grids");

  double diff_sum = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    if (valid.data()[i]) diff_sum += truth.data()[i] - learned.data()[i];
  rep.shift = diff_sum / static_cast<double>(rep.valid_nodes);

  rep.grid_abs_error.resize(truth.rows(), truth.cols());
  double abs_sum = 0.0, sq_sum = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (!valid.data()[i]) {
      rep.grid_abs_error.data()[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double e = std::abs(learned.data()[i] + rep.shift - truth.data()[i]);
    rep.grid_abs_error.data()[i] = e;
    rep.sup_error = std::max(rep.sup_error, e);
    abs_sum += e;
    sq_sum += e * e;
  }
  rep.mean_error = abs_sum / static_cast<double>(rep.valid_nodes);
  rep.rmse = std::sqrt(sq_sum / static_cast<double>(rep.valid_nodes));
  return rep;
}

/// Shifted error of `learned` against `truth` at arbitrary phase points.
inline ErrorReport shifted_error_at(const ScalarField& truth,
                                    const ScalarField& learned,
                                    const std::vector<PhasePoint>& points) {
  Matrix t(static_cast<Eigen::Index>(points.size()), 1);
  Matrix l(t.rows(), 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double tv = truth(points[i]);
    const double lv = learned(points[i]);
    t(static_cast<Eigen::Index>(i), 0) =
        std::isfinite(tv) ? tv : std::numeric_limits<double>::quiet_NaN();
    l(static_cast<Eigen::Index>(i), 0) =
        std::isfinite(lv) ? lv : std::numeric_limits<double>::quiet_NaN();
  }
  return shifted_error(t, l);
}

/// Least-squares slope of log(y) against log(x); absent for fewer than two
/// points or any non-positive value.
inline std::optional<double> loglog_slope(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  if (x.size() < 2 || x.size() != y.size()) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

/// Settings shared by the convergence and noise studies.
struct StudyConfig {
  double eta = 1.0;
  double c = 5e-6;
  double alpha = 0.4;
  std::vector<std::uint64_t> seeds{0};
  Box box;
  GridSpec grid;
  /// When > 0, also report shifted errors on this many uniform points of
  /// the training box (seeded per run) in addition to the (q1, q2) slice.
  int phase_space_samples = 0;
};

struct StudyRow {
  Eigen::Index n = 0;
  double sigma = 0.0;
  /// Absent on aggregated rows.
  std::optional<std::uint64_t> seed;
  double lambda = 0.0;
  double sup_error = 0.0;
  double mean_error = 0.0;
  double phase_sup_error = std::numeric_limits<double>::quiet_NaN();
  double phase_mean_error = std::numeric_limits<double>::quiet_NaN();
};

struct StudyTable {
  /// Per-seed rows followed by one aggregated row per setting.
  std::vector<StudyRow> rows;
  std::optional<double> slope;

  std::vector<StudyRow> aggregated() const {
    std::vector<StudyRow> out;
    for (const auto& r : rows)
      if (!r.seed) out.push_back(r);
    return out;
  }
};

namespace detail {

inline StudyRow run_study_cell(const HamiltonianSystem& system, Eigen::Index n,
                               double sigma, std::uint64_t seed,
                               const StudyConfig& cfg, const Matrix& truth_grid) {
  const Dataset data = sample_dataset(system, n, cfg.box, sigma, seed);
  const double lambda = scaled_lambda(cfg.c, n, cfg.alpha);
  const auto model = fit(data, GaussianKernel(cfg.eta), lambda);
  const ScalarField learned = [&](const Vector& z) { return predict_h(model, z); };
  const ErrorReport rep = shifted_error(truth_grid, potential_grid(learned, cfg.grid));
  StudyRow row{n, sigma, seed, lambda, rep.sup_error, rep.mean_error};
  if (cfg.phase_space_samples > 0) {
    PortableRng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<PhasePoint> pts(static_cast<std::size_t>(cfg.phase_space_samples));
    for (auto& p : pts) {
      p.resize(static_cast<Eigen::Index>(cfg.box.size()));
      for (std::size_t k = 0; k < cfg.box.size(); ++k)
        p[static_cast<Eigen::Index>(k)] = rng.uniform(cfg.box[k].first, cfg.box[k].second);
    }
    const ErrorReport ph = shifted_error_at(
        [&](const Vector& z) { return system.h(z); }, learned, pts);
    row.phase_sup_error = ph.sup_error;
    row.phase_mean_error = ph.mean_error;
  }
  return row;
}

inline StudyRow average_rows(const std::vector<StudyRow>& cells) {
  StudyRow agg = cells.front();
  agg.seed.reset();
  agg.sup_error = agg.mean_error = agg.phase_sup_error = agg.phase_mean_error = 0.0;
  for (const auto& r : cells) {
    agg.sup_error += r.sup_error;
    agg.mean_error += r.mean_error;
    agg.phase_sup_error += r.phase_sup_error;
    agg.phase_mean_error += r.phase_mean_error;
  }
  const double k = static_cast<double>(cells.size());
  agg.sup_error /= k;
  agg.mean_error /= k;
  agg.phase_sup_error /= k;
  agg.phase_mean_error /= k;
  return agg;
}

inline void validate_study(const HamiltonianSystem& system, const StudyConfig& cfg) {
  require(system.d() == 2, "studies evaluate on the (q1, q2) plane and need d = 2");
  require(!cfg.seeds.empty(), "study: at least one seed is required");
  require(cfg.eta > 0.0 && cfg.c > 0.0, "study: eta and c must be > 0");
  require(cfg.box.size() == 4, "study: box must have 4 intervals");
  cfg.grid.validate();
}

}  // namespace detail

/// Fits with lambda = c N^{-alpha} for each N and reports shifted grid
/// errors per seed and averaged over seeds, plus the log-log slope of the
/// averaged mean error against N.
inline StudyTable convergence_study(const HamiltonianSystem& system,
                                    const std::vector<Eigen::Index>& n_list,
                                    double sigma, const StudyConfig& cfg) {
  detail::validate_study(system, cfg);
  require(!n_list.empty(), "convergence: N list must be nonempty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    require(n_list[i] >= 1, "convergence: N must be >= 1");
    require(i == 0 || n_list[i] > n_list[i - 1], "convergence: N list must be increasing");
  }
  require(cfg.alpha > 0.0 && cfg.alpha < 0.5, "convergence: alpha must lie in (0, 1/2)");
  require(sigma >= 0.0, "convergence: sigma must be >= 0");

  const Matrix truth = potential_grid([&](const Vector& z) { return system.h(z); }, cfg.grid);
  StudyTable table;
  std::vector<StudyRow> aggregated;
  for (Eigen::Index n : n_list) {
    std::vector<StudyRow> cells;
    for (std::uint64_t seed : cfg.seeds)
      cells.push_back(detail::run_study_cell(system, n, sigma, seed, cfg, truth));
    table.rows.insert(table.rows.end(), cells.begin(), cells.end());
    aggregated.push_back(detail::average_rows(cells));
  }
  std::vector<double> xs, ys;
  for (const auto& r : aggregated) {
    xs.push_back(static_cast<double>(r.n));
    ys.push_back(r.mean_error);
  }
  table.rows.insert(table.rows.end(), aggregated.begin(), aggregated.end());
  table.slope = loglog_slope(xs, ys);
  return table;
}

/// Shifted grid errors for fixed (eta, c, alpha) and N across noise levels.
inline StudyTable noise_sweep(const HamiltonianSystem& system, Eigen::Index n,
                              const std::vector<double>& sigma_list,
                              const StudyConfig& cfg) {
  detail::validate_study(system, cfg);
  require(n >= 1, "noise sweep: N must be >= 1");
  for (double s : sigma_list)
    require(s >= 0.0 && std::isfinite(s), "noise sweep: sigma values must be >= 0");

  StudyTable table;
  if (sigma_list.empty()) return table;
  const Matrix truth = potential_grid([&](const Vector& z) { return system.h(z); }, cfg.grid);
  std::vector<StudyRow> aggregated;
  for (double sigma : sigma_list) {
    std::vector<StudyRow> cells;
    for (std::uint64_t seed : cfg.seeds)
      cells.push_back(detail::run_study_cell(system, n, sigma, seed, cfg, truth));
    table.rows.insert(table.rows.end(), cells.begin(), cells.end());
    aggregated.push_back(detail::average_rows(cells));
  }
  table.rows.insert(table.rows.end(), aggregated.begin(), aggregated.end());
  return table;
}

/// Columns N,sigma,seed,lambda,sup_error,mean_error[,phase_*]; aggregated
/// rows carry seed "mean".
inline void write_study_csv(std::ostream& out, const StudyTable& table,
                            bool with_phase_space) {
  out << "N,sigma,seed,lambda,sup_error,mean_error";
  if (with_phase_space) out << ",phase_sup_error,phase_mean_error";
  out << '\n';
  out.precision(17);
  for (const auto& r : table.rows) {
    out << r.n << ',' << r.sigma << ',';
    if (r.seed) out << *r.seed; else out << "mean";
    out << ',' << r.lambda << ',' << r.sup_error << ',' << r.mean_error;
    if (with_phase_space) out << ',' << r.phase_sup_error << ',' << r.phase_mean_error;
    out << '\n';
  }
}

/// Matrix with its axes: the header row holds q1 nodes, the first column q2.
inline void write_grid_csv(std::ostream& out, const Matrix& values,
                           const GridSpec& grid) {
  const auto q1 = grid.axis(0);
  const auto q2 = grid.axis(1);
  out.precision(17);
  out << "q2\\q1";
  for (double v : q1) out << ',' << v;
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out << q2[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << values(r, c);
    out << '\n';
  }
}

}  // namespace hamkrr
