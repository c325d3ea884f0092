#pragma once

#include <cstddef>

#include "lanova/nuisance.hpp"
#include "lanova/tensor.hpp"

namespace lanova {

double normal_cdf(double x);
/// 1 - Phi(x), computed without cancellation in the upper tail.
double normal_upper_tail(double x);
double normal_quantile(double prob);

/// Outcome of the test of normal-tailed elementwise variation.
struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
};

/// Test statistic for already-computed estimates over `cells` entries.
/// The numerator keeps the unclipped fourth-moment estimate so that evidence
/// against heavy tails gives a negative statistic.
TestResult heavy_tail_test(const NuisanceEstimates& est, std::size_t cells, double alpha);

/// Asymptotically level-alpha test that the interactions plus noise are
/// i.i.d. normal. Rejection supports sparse (heavy-tailed) interactions.
TestResult heavy_tail_test(const DenseTensor& y, double alpha = 0.05);

/// Asymptotic power when interactions are Laplace with variance ratio
/// phi2 = sigma2_c / sigma2_z and `cells` total entries.
double power_laplace(double phi2, double cells, double alpha);

/// Asymptotic power when interactions are zero w.p. 1 - pi_c and
/// N(0, tau2_c) otherwise, with phi2 = tau2_c / sigma2_z.
double power_bernoulli_normal(double phi2, double pi_c, double cells, double alpha);

}  // namespace lanova
