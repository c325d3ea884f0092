#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "lanova/nuisance.hpp"
#include "lanova/tensor.hpp"

namespace lanova {

struct SolverOptions {
  /// Stop once the relative objective change between sweeps drops below tol.
  double tol = 1e-10;
  std::size_t max_sweeps = 500;
  /// Additionally require the largest per-sweep change of any penalized
  /// coefficient to be at most coef_tol. Infinite by default, i.e. only the
  /// objective criterion applies.
  double coef_tol = std::numeric_limits<double>::infinity();
  /// Penalize row and column effects too (matrix input only).
  bool penalize_lower_order = false;

  void validate() const;
};

enum class FitRoute {
  iterative,  // block coordinate descent
  additive,   // interaction variance estimate <= 0: C = 0
  saturated,  // noise variance estimate <= 0: M = Y
};

const char* to_string(FitRoute route);

struct LanovaFit {
  /// Parameter estimates by block; the top block is the interaction estimate.
  /// With unpenalized lower-order blocks these are the zero-sum OLS effects
  /// of the additive part. With penalized main effects they are the raw
  /// (sparse) row and column estimates and need not sum to zero.
  AnovaDecomposition blocks;
  DenseTensor fitted;
  std::vector<std::size_t> nonzero_counts;
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
  FitRoute route = FitRoute::iterative;
  bool penalized_lower_order = false;

  const DenseTensor& interactions() const { return blocks.effect(blocks.top_mask()); }
};

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Lasso on the top-order interactions with every lower-order ANOVA block
/// left unpenalized. Threshold = lambda_c * sigma2_z.
LanovaFit fit_lanova(const DenseTensor& y, const NuisanceEstimates& nu, const SolverOptions& opts = {});

/// Matrix variant that also soft-thresholds the row and column effects with
/// penalties lambda_a and lambda_b. The grand mean stays unpenalized.
LanovaFit fit_lanova_full(const DenseTensor& y, const NuisanceEstimates& nu, const LowerOrderVariances& lo,
                          const SolverOptions& opts = {});

/// Penalized least-squares objective at a fit. Pass `lo` to include the row
/// and column penalties. Throws ModelError when sigma2_z is zero.
double objective(const LanovaFit& fit, const DenseTensor& y, const NuisanceEstimates& nu,
                 const LowerOrderVariances* lo = nullptr);

/// Estimates the nuisance parameters from `y` and fits, honouring
/// opts.penalize_lower_order.
LanovaFit fit_with_estimates(const DenseTensor& y, const SolverOptions& opts = {});

}  // namespace lanova
