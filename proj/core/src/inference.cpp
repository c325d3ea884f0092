#include "lanova/inference.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>

#include "lanova/error.hpp"

namespace lanova {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("normal_quantile: prob must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

TestResult heavy_tail_test(const NuisanceEstimates& est, std::size_t cells, double alpha) {
  check_alpha(alpha);
  const double total = est.sigma2_c + est.sigma2_z;
  if (!(total > 0.0)) throw ModelError("zero total variance");
  TestResult out;
  out.alpha = alpha;
  out.statistic = std::sqrt(static_cast<double>(cells)) * est.sigma4_c_raw / (std::sqrt(8.0 / 3.0) * total * total);
  out.p_value = normal_upper_tail(out.statistic);
  out.reject = out.statistic > normal_quantile(1.0 - alpha);
  return out;
}

TestResult heavy_tail_test(const DenseTensor& y, double alpha) {
  check_alpha(alpha);
  return heavy_tail_test(estimate_nuisance(y), y.size(), alpha);
}

double power_laplace(double phi2, double cells, double alpha) {
  check_alpha(alpha);
  if (!(phi2 >= 0.0)) throw std::invalid_argument("phi2 must be non-negative");
  const double z = normal_quantile(1.0 - alpha);
  const double ratio = phi2 / (phi2 + 1.0);
  const double shift = std::sqrt(3.0 * cells / 8.0) * ratio * ratio;
  const double phi4 = phi2 * phi2;
  const double extra = (68.0 * phi4 * phi4 + 36.0 * phi4 * phi2 + 9.0 * phi4) / std::pow(1.0 + phi2, 4);
  return normal_upper_tail((z - shift) / std::sqrt(1.0 + extra));
}

double power_bernoulli_normal(double phi2, double pi_c, double cells, double alpha) {
  check_alpha(alpha);
  if (!(phi2 >= 0.0)) throw std::invalid_argument("phi2 must be non-negative");
  if (!(pi_c >= 0.0 && pi_c <= 1.0)) throw std::invalid_argument("pi_c must lie in [0, 1]");
  const double z = normal_quantile(1.0 - alpha);
  const double mix = pi_c * (1.0 - pi_c);
  const double denom = pi_c * phi2 + 1.0;
  const double ratio = phi2 / denom;
  const double shift = mix * std::sqrt(3.0 * cells / 8.0) * ratio * ratio;
  const double phi4 = phi2 * phi2;
  const double extra = mix *
                       ((20.0 * pi_c * pi_c - 28.0 * pi_c + 35.0) * phi4 * phi4 +
                        16.0 * (5.0 - pi_c) * phi4 * phi2 + 72.0 * phi4) /
                       (8.0 * std::pow(denom, 4));
  return normal_upper_tail((z - shift) / std::sqrt(1.0 + extra));
}

}  // namespace lanova
