#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lanova/baselines.hpp"
#include "lanova/rng.hpp"
#include "lanova/solver.hpp"
#include "lanova/tensor.hpp"

namespace lanova {

/// Distribution of the elementwise interactions in simulated data.
struct InteractionDist {
  enum class Kind { laplace, exp_power, bernoulli_normal, normal };

  Kind kind = Kind::laplace;
  double variance = 1.0;   // sigma2_c, or the slab variance tau2_c for bernoulli_normal
  double shape = 1.0;      // exponential-power q_c
  double inclusion = 1.0;  // bernoulli_normal pi_c

  static InteractionDist laplace(double variance);
  static InteractionDist exp_power(double variance, double shape);
  static InteractionDist bernoulli_normal(double inclusion, double slab_variance);
  static InteractionDist normal(double variance);

  double excess_kurtosis() const;
  /// Variance of a single interaction (pi_c * tau2_c for spike-and-slab).
  double marginal_variance() const;
  std::string describe() const;
  void validate() const;
};

/// Gamma(5/q) Gamma(1/q) / Gamma(3/q)^2 - 3.
double exp_power_kurtosis(double shape);

double draw_interaction(const InteractionDist& dist, Philox4x32& rng);

struct SimConfig {
  Dims dims{25, 25};
  InteractionDist c_dist = InteractionDist::laplace(1.0);
  double sigma2_z = 1.0;
  std::size_t n_reps = 10000;
  std::uint64_t seed = 20190101;
  /// Comparators for risk studies; the LANOVA estimate is always included.
  std::vector<BaselineSpec> estimators;
  SolverOptions solver;
  /// 0 = resolve from LANOVA_THREADS / hardware.
  unsigned threads = 0;

  void validate() const;
};

struct Dataset {
  DenseTensor y;
  DenseTensor m_true;
  DenseTensor c_true;
};

/// Y = C + Z with zero grand mean and main effects. Deterministic in
/// (cfg.seed, rep): replicate `rep` always reads substream `rep`.
Dataset generate_dataset(const SimConfig& cfg, std::size_t rep);

struct RateEstimate {
  std::size_t hits = 0;
  std::size_t reps = 0;
  double rate = 0.0;
  double se = 0.0;

  static RateEstimate from_counts(std::size_t hits, std::size_t reps);
};

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
};

struct SpecialCaseRates {
  RateEstimate additive;   // sigma2_c estimate <= 0
  RateEstimate saturated;  // sigma2_z estimate clipped
};

SpecialCaseRates special_case_rate_study(const SimConfig& cfg);

/// Empirical rejection rate of the heavy-tail test at level alpha.
RateEstimate rejection_rate_study(const SimConfig& cfg, double alpha);

/// Rejection rate under normal (null) interactions.
RateEstimate test_calibration_study(const SimConfig& cfg, double alpha);

struct PowerComparison {
  double phi2 = 0.0;
  double predicted = 0.0;
  RateEstimate empirical;
};

/// Empirical power next to the closed-form asymptotic power, for Laplace or
/// spike-and-slab interactions.
PowerComparison power_study(const SimConfig& cfg, double alpha);

struct BiasCheck {
  MeanEstimate sigma4_raw;
  double truth = 0.0;     // sigma4_c
  double expected = 0.0;  // sigma4_c + bias_sigma4(...)
};

/// Monte Carlo mean of the raw fourth-moment estimate under Laplace data.
BiasCheck bias_study(const SimConfig& cfg);

struct MisspecificationCheck {
  double kappa = 0.0;
  double expected_ratio = 0.0;  // sqrt(kappa / 3)
  double median_ratio = 0.0;    // median of sigma2_c estimate / sigma2_c
  double expected_sigma2_z = 0.0;
  double median_sigma2_z = 0.0;
  std::vector<double> ratios;
};

MisspecificationCheck misspecification_study(const SimConfig& cfg);

struct RiskEntry {
  std::string name;
  double mse = 0.0;
  double se = 0.0;
  /// log(mse of LANOVA / mse of this estimator); negative favours LANOVA.
  double log_relative_risk = 0.0;
  std::vector<double> losses;
};

struct RiskTable {
  std::size_t n_reps = 0;
  std::vector<RiskEntry> entries;  // entries[0] is "lanova"

  const RiskEntry& at(const std::string& name) const;
  /// sqrt(se_a^2 + se_b^2).
  double combined_se(const std::string& a, const std::string& b) const;
};

std::vector<BaselineSpec> default_risk_estimators();

/// Per-cell squared error ||M_hat - M||^2 / prod(dims) for every estimator.
RiskTable risk_study(const SimConfig& cfg);

struct RiskGridPoint {
  InteractionDist dist;
  RiskTable table;
};

std::vector<InteractionDist> exp_power_grid();
std::vector<InteractionDist> bernoulli_normal_grid();

/// Runs risk_study at each distribution, reusing every other field of `base`.
std::vector<RiskGridPoint> risk_grid(const SimConfig& base, const std::vector<InteractionDist>& grid);

}  // namespace lanova
