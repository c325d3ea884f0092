#include "lanova/nuisance.hpp"

#include <cmath>
#include <stdexcept>

#include "lanova/error.hpp"

namespace lanova {

double laplace_rate(double variance) {
  if (!(variance > 0.0)) return kInfinitePenalty;
  return std::sqrt(2.0 / variance);
}

double fourth_moment_scale(const Dims& dims) {
  double scale = 1.0;
  for (std::size_t pk : dims) {
    const double p = static_cast<double>(pk);
    scale *= (p * p * p) / ((p - 1.0) * (p * p - 3.0 * p + 3.0));
  }
  return scale;
}

double second_moment_scale(const Dims& dims) {
  double scale = 1.0;
  for (std::size_t pk : dims) {
    const double p = static_cast<double>(pk);
    scale *= p / (p - 1.0);
  }
  return scale;
}

NuisanceEstimates NuisanceEstimates::from_variances(double sigma2_c, double sigma2_z) {
  NuisanceEstimates est;
  est.clipped_c = !(sigma2_c > 0.0);
  est.sigma2_c = est.clipped_c ? 0.0 : sigma2_c;
  est.sigma4_c_raw = est.clipped_c ? 0.0 : sigma2_c * sigma2_c;
  est.clipped_z = sigma2_z < 0.0;
  est.sigma2_z = est.clipped_z ? 0.0 : sigma2_z;
  est.lambda_c = laplace_rate(est.sigma2_c);
  return est;
}

LowerOrderVariances LowerOrderVariances::from_variances(double sigma2_a, double sigma2_b) {
  LowerOrderVariances lo;
  lo.sigma2_a_raw = sigma2_a;
  lo.sigma2_b_raw = sigma2_b;
  lo.clipped_a = !(sigma2_a > 0.0);
  lo.clipped_b = !(sigma2_b > 0.0);
  lo.sigma2_a = lo.clipped_a ? 0.0 : sigma2_a;
  lo.sigma2_b = lo.clipped_b ? 0.0 : sigma2_b;
  lo.lambda_a = laplace_rate(lo.sigma2_a);
  lo.lambda_b = laplace_rate(lo.sigma2_b);
  return lo;
}

NuisanceEstimates nuisance_from_moments(const Dims& dims, const SampleMoments& m) {
  NuisanceEstimates est;
  est.sigma4_c_raw = fourth_moment_scale(dims) * (m.mean_fourth / 3.0 - m.mean_sq * m.mean_sq);
  // A zero estimate is routed like a negative one: no interaction variance,
  // infinite penalty, strictly additive fit.
  est.clipped_c = !(est.sigma4_c_raw > 0.0);
  est.sigma2_c = est.clipped_c ? 0.0 : std::sqrt(est.sigma4_c_raw);
  const double sigma2_z = second_moment_scale(dims) * m.mean_sq - est.sigma2_c;
  est.clipped_z = sigma2_z < 0.0;
  est.sigma2_z = est.clipped_z ? 0.0 : sigma2_z;
  est.lambda_c = laplace_rate(est.sigma2_c);
  return est;
}

NuisanceEstimates estimate_nuisance(const DenseTensor& y) {
  const DenseTensor r = center_residuals(y);
  return nuisance_from_moments(y.dims(), sample_moments(r));
}

double bias_sigma4(const Dims& dims, double sigma2_c, double sigma2_z) {
  double quartic = 3.0;
  double quadratic = 2.0;
  for (std::size_t pk : dims) {
    const double p = static_cast<double>(pk);
    quartic *= (p - 1.0) * (p - 1.0) / (p * p * p);
    quadratic *= (p - 1.0) / (p * p);
  }
  const double total = sigma2_c + sigma2_z;
  return -fourth_moment_scale(dims) * (quartic * sigma2_c * sigma2_c + quadratic * total * total);
}

LowerOrderVariances estimate_lower_order_variances(const DenseTensor& y) {
  if (y.order() != 2) throw std::invalid_argument("estimate_lower_order_variances: matrix input required");
  require_nondegenerate(y.dims());
  const std::size_t n = y.dim(0);
  const std::size_t p = y.dim(1);
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);

  const double r2 = sample_moments(center_residuals(y)).mean_sq;
  const DenseTensor row_means = marginal_mean(y, 0b01);
  const DenseTensor col_means = marginal_mean(y, 0b10);
  const double grand = marginal_mean(y, 0)[0];

  double ss_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_a += (row_means[i] - grand) * (row_means[i] - grand);
  double ss_b = 0.0;
  for (std::size_t j = 0; j < p; ++j) ss_b += (col_means[j] - grand) * (col_means[j] - grand);

  const double sigma2_a = ss_a / (nd - 1.0) - nd * r2 / ((nd - 1.0) * (pd - 1.0));
  const double sigma2_b = ss_b / (pd - 1.0) - pd * r2 / ((nd - 1.0) * (pd - 1.0));
  return LowerOrderVariances::from_variances(sigma2_a, sigma2_b);
}

double kurtosis_from_inclusion(double pi_c) {
  if (!(pi_c >= 0.0 && pi_c <= 1.0)) throw std::invalid_argument("pi_c must lie in [0, 1]");
  if (pi_c == 0.0) return kInfinitePenalty;
  return 3.0 * (1.0 - pi_c) / pi_c;
}

NuisanceEstimates kurtosis_correction(const NuisanceEstimates& est, double kappa) {
  if (!(kappa > 0.0)) throw ModelError("normal-tails correction undefined");
  if (!std::isfinite(kappa)) throw ModelError("correction undefined for infinite kurtosis");
  if (est.clipped_c) return est;

  const double shrink = std::sqrt(3.0 / kappa);
  NuisanceEstimates out = est;
  out.sigma2_c = shrink * est.sigma2_c;
  out.sigma4_c_raw = est.sigma4_c_raw * (3.0 / kappa);
  out.clipped_c = !(out.sigma2_c > 0.0);
  const double sigma2_z = est.sigma2_z - (1.0 - std::sqrt(kappa / 3.0)) * shrink * est.sigma2_c;
  out.clipped_z = est.clipped_z || sigma2_z < 0.0;
  out.sigma2_z = sigma2_z < 0.0 ? 0.0 : sigma2_z;
  out.lambda_c = laplace_rate(out.sigma2_c);
  return out;
}

}  // namespace lanova
