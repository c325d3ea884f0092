#include "lanova/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lanova/error.hpp"

namespace lanova {

namespace {

double l1_norm(const DenseTensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += std::abs(v);
  return s;
}

// lambda * ||x||_1 with an infinite lambda contributing nothing on an
// all-zero block.
double penalty(double lambda, double l1) { return l1 == 0.0 ? 0.0 : lambda * l1; }

double sum_sq_diff(const DenseTensor& a, const DenseTensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool has_converged(double previous, double current, double max_step, const SolverOptions& opts) {
  const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
  return std::abs(previous - current) < opts.tol * scale && max_step <= opts.coef_tol;
}

void count_nonzeros(LanovaFit& fit) {
  fit.nonzero_counts.clear();
  for (const auto& block : fit.blocks.effects) fit.nonzero_counts.push_back(block.count_nonzero());
}

void check_input(const DenseTensor& y) {
  if (y.order() < 2) throw std::invalid_argument("LANOVA fits need at least two modes");
  require_nondegenerate(y.dims());
  if (!y.all_finite()) throw ModelError("non-finite values in Y");
}

LanovaFit additive_fit(const DenseTensor& y) {
  LanovaFit fit;
  fit.route = FitRoute::additive;
  fit.blocks = anova_decompose(y);
  DenseTensor& top = fit.blocks.effect(fit.blocks.top_mask());
  fit.fitted = y - top;
  top = DenseTensor(top.dims(), 0.0);
  fit.converged = true;
  count_nonzeros(fit);
  return fit;
}

LanovaFit saturated_fit(const DenseTensor& y) {
  LanovaFit fit;
  fit.route = FitRoute::saturated;
  fit.blocks = anova_decompose(y);
  fit.fitted = y;
  fit.converged = true;
  count_nonzeros(fit);
  return fit;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("SolverOptions: tol must be positive");
  if (max_sweeps < 1) throw std::invalid_argument("SolverOptions: max_sweeps must be >= 1");
  if (!(coef_tol >= 0.0)) throw std::invalid_argument("SolverOptions: coef_tol must be non-negative");
}

const char* to_string(FitRoute route) {
  switch (route) {
    case FitRoute::iterative: return "iterative";
    case FitRoute::additive: return "additive";
    case FitRoute::saturated: return "saturated";
  }
  return "unknown";
}

LanovaFit fit_lanova(const DenseTensor& y, const NuisanceEstimates& nu, const SolverOptions& opts) {
  opts.validate();
  check_input(y);
  if (nu.clipped_c || !std::isfinite(nu.lambda_c)) return additive_fit(y);
  if (nu.clipped_z || !(nu.sigma2_z > 0.0)) return saturated_fit(y);

  const double threshold = nu.lambda_c * nu.sigma2_z;
  const double inv_two_var = 0.5 / nu.sigma2_z;

  LanovaFit fit;
  fit.route = FitRoute::iterative;

  DenseTensor interactions = center_residuals(y);
  DenseTensor work(y.dims());
  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    // Lower-order blocks: OLS on Y - C, which leaves Y minus that fit as the
    // centered part of Y - C plus C.
    work = y;
    work -= interactions;
    for (std::size_t k = 0; k < work.order(); ++k) center_mode(work, k);
    double max_step = 0.0;
    double loss = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = work[i] + interactions[i];
      const double c = soft_threshold(r, threshold);
      max_step = std::max(max_step, std::abs(c - interactions[i]));
      interactions[i] = c;
      loss += (r - c) * (r - c);
      l1 += std::abs(c);
    }
    const double value = inv_two_var * loss + penalty(nu.lambda_c, l1);
    fit.iterations = sweep;
    const bool done = !fit.objective_trace.empty() &&
                      has_converged(fit.objective_trace.back(), value, max_step, opts);
    fit.objective_trace.push_back(value);
    if (done) {
      fit.converged = true;
      break;
    }
  }

  // Closing lower-order update so that Y - M is exactly centered: the mean
  // and main effects of M then match those of Y regardless of tolerance.
  DenseTensor lower = lower_order_fit(y - interactions);
  fit.blocks = anova_decompose(lower);
  fit.blocks.effect(fit.blocks.top_mask()) = interactions;
  fit.blocks.residual = DenseTensor(y.dims(), 0.0);
  fit.fitted = std::move(lower);
  fit.fitted += interactions;
  count_nonzeros(fit);
  return fit;
}

LanovaFit fit_lanova_full(const DenseTensor& y, const NuisanceEstimates& nu, const LowerOrderVariances& lo,
                          const SolverOptions& opts) {
  opts.validate();
  check_input(y);
  if (y.order() != 2) throw std::invalid_argument("fit_lanova_full: matrix input required");
  if (nu.clipped_z || !(nu.sigma2_z > 0.0)) {
    LanovaFit fit = saturated_fit(y);
    fit.penalized_lower_order = true;
    return fit;
  }

  const std::size_t n = y.dim(0);
  const std::size_t p = y.dim(1);
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const double lambda_c = nu.clipped_c ? kInfinitePenalty : nu.lambda_c;
  const double t_c = lambda_c * nu.sigma2_z;
  // Each row effect touches p cells and each column effect n cells.
  const double t_a = lo.lambda_a * nu.sigma2_z / pd;
  const double t_b = lo.lambda_b * nu.sigma2_z / nd;
  const double inv_two_var = 0.5 / nu.sigma2_z;

  LanovaFit fit;
  fit.route = nu.clipped_c ? FitRoute::additive : FitRoute::iterative;
  fit.penalized_lower_order = true;

  double mu = 0.0;
  std::vector<double> a(n, 0.0);
  std::vector<double> b(p, 0.0);
  DenseTensor c = nu.clipped_c ? DenseTensor(y.dims(), 0.0) : center_residuals(y);

  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < n; ++i) total += y(i, j) - a[i] - b[j] - c(i, j);
    mu = total / (nd * pd);

    double max_step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += y(i, j) - mu - b[j] - c(i, j);
      const double next = soft_threshold(s / pd, t_a);
      max_step = std::max(max_step, std::abs(next - a[i]));
      a[i] = next;
    }
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += y(i, j) - mu - a[i] - c(i, j);
      const double next = soft_threshold(s / nd, t_b);
      max_step = std::max(max_step, std::abs(next - b[j]));
      b[j] = next;
    }

    double loss = 0.0;
    double l1_c = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y(i, j) - mu - a[i] - b[j];
        const double next = soft_threshold(r, t_c);
        max_step = std::max(max_step, std::abs(next - c(i, j)));
        c(i, j) = next;
        loss += (r - next) * (r - next);
        l1_c += std::abs(next);
      }
    }
    double l1_a = 0.0;
    for (double v : a) l1_a += std::abs(v);
    double l1_b = 0.0;
    for (double v : b) l1_b += std::abs(v);
    const double value = inv_two_var * loss + penalty(lo.lambda_a, l1_a) + penalty(lo.lambda_b, l1_b) +
                         penalty(lambda_c, l1_c);

    fit.iterations = sweep;
    const bool done = !fit.objective_trace.empty() &&
                      has_converged(fit.objective_trace.back(), value, max_step, opts);
    fit.objective_trace.push_back(value);
    if (done) {
      fit.converged = true;
      break;
    }
  }

  fit.blocks.dims = y.dims();
  fit.blocks.effects = {DenseTensor(Dims{}, std::vector<double>{mu}), DenseTensor(Dims{n}, a),
                        DenseTensor(Dims{p}, b), c};
  fit.blocks.residual = DenseTensor(y.dims(), 0.0);
  fit.fitted = fit.blocks.reassemble();
  count_nonzeros(fit);
  return fit;
}

double objective(const LanovaFit& fit, const DenseTensor& y, const NuisanceEstimates& nu,
                 const LowerOrderVariances* lo) {
  if (!(nu.sigma2_z > 0.0)) throw ModelError("degenerate objective");
  const double lambda_c = nu.clipped_c ? kInfinitePenalty : nu.lambda_c;
  double value = 0.5 * sum_sq_diff(y, fit.fitted) / nu.sigma2_z;
  value += penalty(lambda_c, l1_norm(fit.interactions()));
  if (lo != nullptr && fit.blocks.order() == 2) {
    value += penalty(lo->lambda_a, l1_norm(fit.blocks.effect(0b01)));
    value += penalty(lo->lambda_b, l1_norm(fit.blocks.effect(0b10)));
  }
  return value;
}

LanovaFit fit_with_estimates(const DenseTensor& y, const SolverOptions& opts) {
  const NuisanceEstimates nu = estimate_nuisance(y);
  if (opts.penalize_lower_order) {
    return fit_lanova_full(y, nu, estimate_lower_order_variances(y), opts);
  }
  return fit_lanova(y, nu, opts);
}

}  // namespace lanova
