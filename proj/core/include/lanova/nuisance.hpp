#pragma once

#include <limits>

#include "lanova/tensor.hpp"

namespace lanova {

inline constexpr double kInfinitePenalty = std::numeric_limits<double>::infinity();

/// Moment-based empirical-Bayes estimates of the interaction and noise
/// variances. `lambda_c` is +infinity whenever the interaction variance
/// estimate is zero, which downstream code reads as "shrink everything".
struct NuisanceEstimates {
  double sigma4_c_raw = 0.0;
  double sigma2_c = 0.0;
  double sigma2_z = 0.0;
  double lambda_c = kInfinitePenalty;
  bool clipped_c = true;
  bool clipped_z = false;

  /// Builds a consistent estimate from user-supplied variances.
  static NuisanceEstimates from_variances(double sigma2_c, double sigma2_z);
};

/// Row/column variance estimates for penalizing main effects (matrix case).
struct LowerOrderVariances {
  double sigma2_a_raw = 0.0;
  double sigma2_b_raw = 0.0;
  double sigma2_a = 0.0;
  double sigma2_b = 0.0;
  double lambda_a = kInfinitePenalty;
  double lambda_b = kInfinitePenalty;
  bool clipped_a = true;
  bool clipped_b = true;

  static LowerOrderVariances from_variances(double sigma2_a, double sigma2_b);
};

/// sqrt(2 / variance), or +infinity for a non-positive variance.
double laplace_rate(double variance);

/// prod_k p_k^3 / ((p_k - 1)(p_k^2 - 3 p_k + 3)).
double fourth_moment_scale(const Dims& dims);

/// prod_k p_k / (p_k - 1).
double second_moment_scale(const Dims& dims);

/// Estimates from already-centered residual moments (no data access).
NuisanceEstimates nuisance_from_moments(const Dims& dims, const SampleMoments& moments);

/// Centers Y along every mode and forms the moment estimators. Invariant to
/// any lower-order additive structure in Y.
NuisanceEstimates estimate_nuisance(const DenseTensor& y);

/// Exact finite-sample bias E[sigma4_c_raw] - sigma4_c under the Laplace
/// model; never positive and O(1 / prod p_k).
double bias_sigma4(const Dims& dims, double sigma2_c, double sigma2_z);

/// Matrix-only estimators of the row and column effect variances.
LowerOrderVariances estimate_lower_order_variances(const DenseTensor& y);

/// Excess kurtosis of a spike-and-slab variable that is nonzero w.p. pi_c.
double kurtosis_from_inclusion(double pi_c);

/// Rescales the interaction variance for an assumed excess kurtosis `kappa`
/// of the interactions (3 = Laplace, which leaves the estimates unchanged).
NuisanceEstimates kurtosis_correction(const NuisanceEstimates& est, double kappa);

}  // namespace lanova
