#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "hamkrr/core.hpp"
#include "hamkrr/estimator.hpp"
#include "hamkrr/kernel.hpp"
#include "hamkrr/random.hpp"
#include "hamkrr/systems.hpp"

namespace hamkrr {

/// (5e-6, 1e-5, 5e-5, ..., 5e-1, 1): the c grid used for every experiment.
inline std::vector<double> default_c_grid() {
  return {5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0};
}

/// Values lo, lo+step, ... strictly below hi (numpy.arange semantics).
inline std::vector<double> arange(double lo, double hi, double step) {
  require(step > 0.0, "arange: step must be > 0");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

struct SearchSpec {
  std::vector<double> eta_grid;
  std::vector<double> c_grid = default_c_grid();
  double alpha = 0.4;
  int folds = 5;
  std::uint64_t seed = 0;

  void validate() const {
    require(folds >= 2, "search: folds must be >= 2");
    require(!eta_grid.empty() && !c_grid.empty(), "search: grids must be nonempty");
    for (double v : eta_grid) require(v > 0.0, "search: eta values must be > 0");
    for (double v : c_grid) require(v > 0.0, "search: c values must be > 0");
    require(std::isfinite(alpha), "search: alpha must be finite");
  }
};

/// Row permutation that sorts the dataset lexicographically by
/// (point, observation). Everything downstream of CV is computed in this
/// order, so scores do not depend on how rows were stored.
inline std::vector<std::size_t> canonical_order(const Dataset& data) {
  std::vector<std::size_t> idx(data.points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto& pa = data.points[a];
    const auto& pb = data.points[b];
    for (Eigen::Index k = 0; k < pa.size(); ++k)
      if (pa[k] != pb[k]) return pa[k] < pb[k];
    const auto& oa = data.observations[a];
    const auto& ob = data.observations[b];
    for (Eigen::Index k = 0; k < oa.size(); ++k)
      if (oa[k] != ob[k]) return oa[k] < ob[k];
    return false;
  };
  std::stable_sort(idx.begin(), idx.end(), row_less);
  return idx;
}

/// Fold index per row. The canonical order is shuffled (Fisher-Yates on
/// PortableRng) and position k goes to fold k mod `folds`, so fold sizes
/// differ by at most one.
inline std::vector<int> fold_assignment(const Dataset& data, int folds,
                                        std::uint64_t seed) {
  require(folds >= 2, "folds must be >= 2");
  require(data.n() >= folds, "cross-validation needs N >= folds");
  std::vector<std::size_t> order = canonical_order(data);
  PortableRng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<int> fold(order.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    fold[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return fold;
}

/// Mean over folds of the held-out mean squared vector-field error.
/// Returns +inf when any fold fails to fit.
template <DifferentiableKernel Kernel>
double cv_score(const Dataset& data, const Kernel& kernel, double lambda,
                int folds, std::uint64_t seed) {
  data.validate();
  const std::vector<int> fold = fold_assignment(data, folds, seed);
  const std::vector<std::size_t> order = canonical_order(data);
  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, held;
    for (std::size_t r : order) (fold[r] == f ? held : train).push_back(r);
    try {
      const auto model = fit(data.subset(train), kernel, lambda);
      double sse = 0.0;
      for (std::size_t r : held)
        sse += (predict_field(model, data.points[r]) - data.observations[r])
                   .squaredNorm();
      const double mse = sse / static_cast<double>(held.size());
      if (!std::isfinite(mse)) return std::numeric_limits<double>::infinity();
      total += mse;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return total / static_cast<double>(folds);
}

struct ScoreRow {
  double eta = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  double score = 0.0;
};

struct SearchResult {
  double eta = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  double score = 0.0;
  /// One row per (eta, c), eta-major in grid order.
  std::vector<ScoreRow> table;
};

/// Grid search over (eta, c) with lambda = c * N^{-alpha}, N the full
/// dataset size. Ties go to the smaller c, then the smaller eta.
inline SearchResult grid_search(const Dataset& data, const SearchSpec& spec) {
  spec.validate();
  data.validate();
  SearchResult result;
  for (double eta : spec.eta_grid) {
    const GaussianKernel kernel(eta);
    for (double c : spec.c_grid) {
      const double lambda = scaled_lambda(c, data.n(), spec.alpha);
      result.table.push_back(
          {eta, c, lambda, cv_score(data, kernel, lambda, spec.folds, spec.seed)});
    }
  }
  const ScoreRow* best = nullptr;
  for (const auto& row : result.table) {
    if (!std::isfinite(row.score)) continue;
    if (best == nullptr || row.score < best->score ||
        (row.score == best->score &&
         (row.c < best->c || (row.c == best->c && row.eta < best->eta))))
      best = &row;
  }
  if (best == nullptr)
    throw NumericalError("grid search: every configuration failed to fit");
  result.eta = best->eta;
  result.c = best->c;
  result.lambda = best->lambda;
  result.score = best->score;
  return result;
}

inline void write_score_csv(std::ostream& out, const std::vector<ScoreRow>& table) {
  out << "eta,c,lambda,score\n";
  out.precision(17);
  for (const auto& r : table)
    out << r.eta << ',' << r.c << ',' << r.lambda << ',' << r.score << '\n';
}

}  // namespace hamkrr
