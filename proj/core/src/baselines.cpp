#include "lanova/baselines.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lanova/solver.hpp"

namespace lanova {

namespace {

void require_matrix(const DenseTensor& y, const char* who) {
  if (y.order() != 2) throw std::invalid_argument(std::string(who) + ": matrix input required");
  require_nondegenerate(y.dims());
}

double median_in_place(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double resolve_sigma(const NoiseScale& noise, std::span<const double> r) {
  if (noise.method == NoiseScale::Method::known) {
    if (!(noise.sigma >= 0.0)) throw std::invalid_argument("known noise scale must be non-negative");
    return noise.sigma;
  }
  return mad_scale(r);
}

}  // namespace

std::string BaselineSpec::name() const {
  switch (kind) {
    case BaselineKind::additive: return "additive";
    case BaselineKind::mle: return "mle";
    case BaselineKind::low_rank: return "low_rank_" + std::to_string(rank);
    case BaselineKind::minimax_universal: return "minimax_universal";
    case BaselineKind::minimax_sure: return "minimax_sure";
  }
  return "unknown";
}

DenseTensor estimate_additive(const DenseTensor& y) {
  require_matrix(y, "estimate_additive");
  return lower_order_fit(y);
}

DenseTensor estimate_mle(const DenseTensor& y) { return y; }

DenseTensor estimate_low_rank(const DenseTensor& y, std::size_t rank) {
  require_matrix(y, "estimate_low_rank");
  const std::size_t n = y.dim(0);
  const std::size_t p = y.dim(1);
  if (rank > std::min(n, p) - 1) throw std::invalid_argument("estimate_low_rank: rank exceeds min(n-1, p-1)");

  const DenseTensor r = center_residuals(y);
  DenseTensor out = y - r;
  if (rank == 0) return out;

  // Column-major storage lines up with the mode-1-fastest layout.
  const Eigen::Map<const Eigen::MatrixXd> resid(r.values().data(), static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(p));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(rank);
  const Eigen::MatrixXd approx = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
                                 svd.matrixV().leftCols(k).transpose();
  Eigen::Map<Eigen::MatrixXd> target(out.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  target += approx;
  return out;
}

double mad_scale(std::span<const double> r) {
  if (r.empty()) return 0.0;
  std::vector<double> v(r.begin(), r.end());
  const double center = median_in_place(v);
  for (double& x : v) x = std::abs(x - center);
  return median_in_place(v) / 0.6745;
}

double universal_threshold(double sigma, std::size_t count) {
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(count)));
}

double sure_risk(std::span<const double> r, double sigma, double t) {
  const double var = sigma * sigma;
  double risk = static_cast<double>(r.size()) * var;
  for (double x : r) {
    const double ax = std::abs(x);
    if (ax <= t) risk -= 2.0 * var;
    risk += std::min(x * x, t * t);
  }
  return risk;
}

double sure_threshold(std::span<const double> r, double sigma) {
  const std::size_t count = r.size();
  std::vector<double> mags(count);
  std::transform(r.begin(), r.end(), mags.begin(), [](double x) { return std::abs(x); });
  std::sort(mags.begin(), mags.end());

  const double var = sigma * sigma;
  const double total = static_cast<double>(count);
  std::size_t zeros = 0;
  while (zeros < count && mags[zeros] == 0.0) ++zeros;
  double best_t = 0.0;
  double best = total * var - 2.0 * var * static_cast<double>(zeros);

  // At t = mags[k] (last of a run of ties) the first k+1 magnitudes are
  // below the threshold and the rest contribute t^2 each.
  double prefix_sq = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    prefix_sq += mags[k] * mags[k];
    if (k + 1 < count && mags[k + 1] == mags[k]) continue;
    const double t = mags[k];
    const double below = static_cast<double>(k + 1);
    const double risk = total * var - 2.0 * var * below + prefix_sq + (total - below) * t * t;
    if (risk < best) {
      best = risk;
      best_t = t;
    }
  }
  return best_t;
}

DenseTensor estimate_minimax(const DenseTensor& y, BaselineKind variant, NoiseScale noise) {
  require_matrix(y, "estimate_minimax");
  const DenseTensor r = center_residuals(y);
  const double sigma = resolve_sigma(noise, r.values());
  double t = 0.0;
  switch (variant) {
    case BaselineKind::minimax_universal: t = universal_threshold(sigma, r.size()); break;
    case BaselineKind::minimax_sure: t = sure_threshold(r.values(), sigma); break;
    default: throw std::invalid_argument("estimate_minimax: variant must be universal or sure");
  }
  DenseTensor out = y - r;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += soft_threshold(r[i], t);
  return out;
}

DenseTensor estimate_baseline(const DenseTensor& y, const BaselineSpec& spec) {
  switch (spec.kind) {
    case BaselineKind::additive: return estimate_additive(y);
    case BaselineKind::mle: return estimate_mle(y);
    case BaselineKind::low_rank: return estimate_low_rank(y, spec.rank);
    case BaselineKind::minimax_universal:
    case BaselineKind::minimax_sure: return estimate_minimax(y, spec.kind, spec.noise);
  }
  throw std::invalid_argument("estimate_baseline: unknown kind");
}

}  // namespace lanova
