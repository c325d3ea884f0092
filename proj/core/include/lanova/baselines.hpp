#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "lanova/tensor.hpp"

namespace lanova {

// Comparator mean estimators for matrices.

enum class BaselineKind { additive, mle, low_rank, minimax_universal, minimax_sure };

/// How the noise scale for the minimax thresholds is obtained.
struct NoiseScale {
  enum class Method { mad, known } method = Method::mad;
  double sigma = 0.0;  // used when method == known

  static NoiseScale mad() { return {}; }
  static NoiseScale known(double s) { return {Method::known, s}; }
};

struct BaselineSpec {
  BaselineKind kind = BaselineKind::additive;
  std::size_t rank = 0;  // low_rank only
  NoiseScale noise = {};

  std::string name() const;
};

/// Y with its centered residuals removed (row + column + grand mean fit).
DenseTensor estimate_additive(const DenseTensor& y);

/// The saturated estimate: Y itself.
DenseTensor estimate_mle(const DenseTensor& y);

/// Additive fit plus the best rank-R approximation of the doubly-centered
/// residuals.
DenseTensor estimate_low_rank(const DenseTensor& y, std::size_t rank);

/// Median absolute deviation of `r` divided by 0.6745.
double mad_scale(std::span<const double> r);

double universal_threshold(double sigma, std::size_t count);

/// Stein's unbiased risk estimate of soft thresholding i.i.d. N(theta, sigma^2)
/// observations at threshold t.
double sure_risk(std::span<const double> r, double sigma, double t);

/// Minimizer of sure_risk over t in {0} U {|r_i|}; smallest on ties.
double sure_threshold(std::span<const double> r, double sigma);

/// Additive fit plus soft-thresholded residuals, treating the residuals as
/// i.i.d. The threshold is universal or SURE-minimizing.
DenseTensor estimate_minimax(const DenseTensor& y, BaselineKind variant, NoiseScale noise = NoiseScale::mad());

DenseTensor estimate_baseline(const DenseTensor& y, const BaselineSpec& spec);

}  // namespace lanova
