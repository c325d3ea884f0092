#include "lanova/simulation.hpp"

#include <algorithm>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lanova/inference.hpp"
#include "lanova/nuisance.hpp"
#include "lanova/parallel.hpp"

namespace lanova {

namespace {

MeanEstimate summarize(const std::vector<double>& values) {
  MeanEstimate out;
  out.reps = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Runs `fn(rep)` for every replicate and returns the per-replicate results
// in replicate order.
template <class T, class Fn>
std::vector<T> map_replicates(const SimConfig& cfg, Fn&& fn) {
  std::vector<T> out(cfg.n_reps);
  parallel_for(cfg.n_reps, resolve_threads(cfg.threads), [&](std::size_t rep) { out[rep] = fn(rep); });
  return out;
}

std::size_t count_true(const std::vector<char>& flags) {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), char{1}));
}

double per_cell_loss(const DenseTensor& estimate, const DenseTensor& truth) {
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimate[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(truth.size());
}

}  // namespace

InteractionDist InteractionDist::laplace(double variance) {
  return {Kind::laplace, variance, 1.0, 1.0};
}

InteractionDist InteractionDist::exp_power(double variance, double shape) {
  return {Kind::exp_power, variance, shape, 1.0};
}

InteractionDist InteractionDist::bernoulli_normal(double inclusion, double slab_variance) {
  return {Kind::bernoulli_normal, slab_variance, 1.0, inclusion};
}

InteractionDist InteractionDist::normal(double variance) {
  return {Kind::normal, variance, 2.0, 1.0};
}

double exp_power_kurtosis(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("exponential-power shape must be positive");
  return std::exp(std::lgamma(5.0 / shape) + std::lgamma(1.0 / shape) - 2.0 * std::lgamma(3.0 / shape)) - 3.0;
}

double InteractionDist::excess_kurtosis() const {
  switch (kind) {
    case Kind::laplace: return 3.0;
    case Kind::exp_power: return exp_power_kurtosis(shape);
    case Kind::bernoulli_normal: return kurtosis_from_inclusion(inclusion);
    case Kind::normal: return 0.0;
  }
  return 0.0;
}

double InteractionDist::marginal_variance() const {
  return kind == Kind::bernoulli_normal ? inclusion * variance : variance;
}

std::string InteractionDist::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::laplace: os << "laplace(sigma2_c=" << variance << ")"; break;
    case Kind::exp_power: os << "exp_power(sigma2_c=" << variance << ", q_c=" << shape << ")"; break;
    case Kind::bernoulli_normal: os << "bernoulli_normal(pi_c=" << inclusion << ", tau2_c=" << variance << ")"; break;
    case Kind::normal: os << "normal(sigma2_c=" << variance << ")"; break;
  }
  return os.str();
}

void InteractionDist::validate() const {
  if (!(variance >= 0.0)) throw std::invalid_argument("interaction variance must be non-negative");
  if (kind == Kind::exp_power && !(shape > 0.0)) throw std::invalid_argument("q_c must be positive");
  if (kind == Kind::bernoulli_normal && !(inclusion >= 0.0 && inclusion <= 1.0)) {
    throw std::invalid_argument("pi_c must lie in [0, 1]");
  }
}

double draw_interaction(const InteractionDist& dist, Philox4x32& rng) {
  switch (dist.kind) {
    case InteractionDist::Kind::laplace: {
      // Scale b = sigma / sqrt(2) gives variance 2 b^2 = sigma^2.
      const double scale = std::sqrt(dist.variance / 2.0);
      const double magnitude = boost::random::exponential_distribution<double>(1.0)(rng);
      return (rng() >> 63) ? scale * magnitude : -scale * magnitude;
    }
    case InteractionDist::Kind::exp_power: {
      // |x| = G^(1/q) with G ~ Gamma(1/q) has density proportional to
      // exp(-|x|^q) and second moment Gamma(3/q) / Gamma(1/q).
      const double q = dist.shape;
      const double g = boost::random::gamma_distribution<double>(1.0 / q, 1.0)(rng);
      const double unit = std::exp(0.5 * (std::lgamma(1.0 / q) - std::lgamma(3.0 / q)));
      const double magnitude = std::pow(g, 1.0 / q) * unit * std::sqrt(dist.variance);
      return (rng() >> 63) ? magnitude : -magnitude;
    }
    case InteractionDist::Kind::bernoulli_normal: {
      const double u = boost::random::uniform_01<double>()(rng);
      if (!(u < dist.inclusion)) return 0.0;
      return boost::random::normal_distribution<double>(0.0, std::sqrt(dist.variance))(rng);
    }
    case InteractionDist::Kind::normal:
      return boost::random::normal_distribution<double>(0.0, std::sqrt(dist.variance))(rng);
  }
  return 0.0;
}

void SimConfig::validate() const {
  if (dims.size() < 2) throw std::invalid_argument("SimConfig: at least two modes required");
  require_nondegenerate(dims);
  c_dist.validate();
  if (!(sigma2_z >= 0.0)) throw std::invalid_argument("SimConfig: sigma2_z must be non-negative");
  if (n_reps < 1) throw std::invalid_argument("SimConfig: n_reps must be >= 1");
  solver.validate();
}

Dataset generate_dataset(const SimConfig& cfg, std::size_t rep) {
  Philox4x32 rng(cfg.seed, static_cast<std::uint64_t>(rep));
  Dataset d{DenseTensor(cfg.dims), DenseTensor(cfg.dims), DenseTensor(cfg.dims)};
  for (double& c : d.c_true.values()) c = draw_interaction(cfg.c_dist, rng);
  boost::random::normal_distribution<double> noise(0.0, std::sqrt(cfg.sigma2_z));
  d.m_true = d.c_true;
  d.y = d.c_true;
  for (double& v : d.y.values()) v += noise(rng);
  return d;
}

RateEstimate RateEstimate::from_counts(std::size_t hits, std::size_t reps) {
  RateEstimate r;
  r.hits = hits;
  r.reps = reps;
  if (reps > 0) {
    r.rate = static_cast<double>(hits) / static_cast<double>(reps);
    r.se = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(reps));
  }
  return r;
}

SpecialCaseRates special_case_rate_study(const SimConfig& cfg) {
  cfg.validate();
  const auto flags = map_replicates<std::pair<char, char>>(cfg, [&](std::size_t rep) {
    const NuisanceEstimates est = estimate_nuisance(generate_dataset(cfg, rep).y);
    return std::pair<char, char>{est.clipped_c, est.clipped_z};
  });
  std::size_t additive = 0;
  std::size_t saturated = 0;
  for (const auto& [c, z] : flags) {
    additive += c ? 1 : 0;
    saturated += z ? 1 : 0;
  }
  return {RateEstimate::from_counts(additive, cfg.n_reps), RateEstimate::from_counts(saturated, cfg.n_reps)};
}

RateEstimate rejection_rate_study(const SimConfig& cfg, double alpha) {
  cfg.validate();
  const auto rejects = map_replicates<char>(cfg, [&](std::size_t rep) -> char {
    return heavy_tail_test(generate_dataset(cfg, rep).y, alpha).reject ? 1 : 0;
  });
  return RateEstimate::from_counts(count_true(rejects), cfg.n_reps);
}

RateEstimate test_calibration_study(const SimConfig& cfg, double alpha) {
  if (cfg.c_dist.kind != InteractionDist::Kind::normal) {
    throw std::invalid_argument("test_calibration_study: null data needs normal interactions");
  }
  return rejection_rate_study(cfg, alpha);
}

PowerComparison power_study(const SimConfig& cfg, double alpha) {
  cfg.validate();
  if (!(cfg.sigma2_z > 0.0)) throw std::invalid_argument("power_study: sigma2_z must be positive");
  PowerComparison out;
  out.phi2 = cfg.c_dist.variance / cfg.sigma2_z;
  const double cells = static_cast<double>(product(cfg.dims));
  switch (cfg.c_dist.kind) {
    case InteractionDist::Kind::laplace: out.predicted = power_laplace(out.phi2, cells, alpha); break;
    case InteractionDist::Kind::bernoulli_normal:
      out.predicted = power_bernoulli_normal(out.phi2, cfg.c_dist.inclusion, cells, alpha);
      break;
    default: throw std::invalid_argument("power_study: closed-form power needs Laplace or spike-and-slab interactions");
  }
  out.empirical = rejection_rate_study(cfg, alpha);
  return out;
}

BiasCheck bias_study(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.c_dist.kind != InteractionDist::Kind::laplace) {
    throw std::invalid_argument("bias_study: the bias formula assumes Laplace interactions");
  }
  const auto raw = map_replicates<double>(
      cfg, [&](std::size_t rep) { return estimate_nuisance(generate_dataset(cfg, rep).y).sigma4_c_raw; });
  BiasCheck out;
  out.sigma4_raw = summarize(raw);
  out.truth = cfg.c_dist.variance * cfg.c_dist.variance;
  out.expected = out.truth + bias_sigma4(cfg.dims, cfg.c_dist.variance, cfg.sigma2_z);
  return out;
}

MisspecificationCheck misspecification_study(const SimConfig& cfg) {
  cfg.validate();
  const double var_c = cfg.c_dist.marginal_variance();
  if (!(var_c > 0.0)) throw std::invalid_argument("misspecification_study: interaction variance must be positive");
  const auto est = map_replicates<NuisanceEstimates>(
      cfg, [&](std::size_t rep) { return estimate_nuisance(generate_dataset(cfg, rep).y); });

  MisspecificationCheck out;
  out.kappa = cfg.c_dist.excess_kurtosis();
  out.expected_ratio = std::sqrt(out.kappa / 3.0);
  out.expected_sigma2_z = cfg.sigma2_z + (1.0 - out.expected_ratio) * var_c;
  std::vector<double> noise;
  for (const auto& e : est) {
    out.ratios.push_back(e.sigma2_c / var_c);
    noise.push_back(e.sigma2_z);
  }
  out.median_ratio = median(out.ratios);
  out.median_sigma2_z = median(noise);
  return out;
}

const RiskEntry& RiskTable::at(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("RiskTable: no estimator named " + name);
}

double RiskTable::combined_se(const std::string& a, const std::string& b) const {
  const double sa = at(a).se;
  const double sb = at(b).se;
  return std::sqrt(sa * sa + sb * sb);
}

std::vector<BaselineSpec> default_risk_estimators() {
  return {
      {BaselineKind::mle, 0, {}},
      {BaselineKind::additive, 0, {}},
      {BaselineKind::low_rank, 1, {}},
      {BaselineKind::low_rank, 5, {}},
      {BaselineKind::minimax_universal, 0, NoiseScale::mad()},
      {BaselineKind::minimax_sure, 0, NoiseScale::mad()},
  };
}

RiskTable risk_study(const SimConfig& cfg) {
  cfg.validate();
  const std::vector<BaselineSpec> specs = cfg.estimators.empty() ? default_risk_estimators() : cfg.estimators;
  const std::size_t n_est = specs.size() + 1;

  const auto losses = map_replicates<std::vector<double>>(cfg, [&](std::size_t rep) {
    const Dataset d = generate_dataset(cfg, rep);
    std::vector<double> row;
    row.reserve(n_est);
    SolverOptions opts = cfg.solver;
    opts.penalize_lower_order = false;
    row.push_back(per_cell_loss(fit_with_estimates(d.y, opts).fitted, d.m_true));
    for (const auto& spec : specs) row.push_back(per_cell_loss(estimate_baseline(d.y, spec), d.m_true));
    return row;
  });

  RiskTable table;
  table.n_reps = cfg.n_reps;
  for (std::size_t e = 0; e < n_est; ++e) {
    RiskEntry entry;
    entry.name = e == 0 ? "lanova" : specs[e - 1].name();
    entry.losses.reserve(cfg.n_reps);
    for (const auto& row : losses) entry.losses.push_back(row[e]);
    const MeanEstimate m = summarize(entry.losses);
    entry.mse = m.mean;
    entry.se = m.se;
    table.entries.push_back(std::move(entry));
  }
  const double base = table.entries.front().mse;
  for (auto& e : table.entries) {
    e.log_relative_risk = (base > 0.0 && e.mse > 0.0) ? std::log(base / e.mse) : 0.0;
  }
  return table;
}

std::vector<InteractionDist> exp_power_grid() {
  std::vector<InteractionDist> grid;
  for (double var : {0.5, 1.0, 2.0}) {
    for (int k = 1; k <= 19; ++k) grid.push_back(InteractionDist::exp_power(var, 0.1 * k));
  }
  return grid;
}

std::vector<InteractionDist> bernoulli_normal_grid() {
  std::vector<InteractionDist> grid;
  for (double tau2 : {0.5, 1.0, 2.0}) {
    for (int k = 0; k <= 10; ++k) grid.push_back(InteractionDist::bernoulli_normal(0.1 * k, tau2));
  }
  return grid;
}

std::vector<RiskGridPoint> risk_grid(const SimConfig& base, const std::vector<InteractionDist>& grid) {
  std::vector<RiskGridPoint> out;
  out.reserve(grid.size());
  for (const auto& dist : grid) {
    SimConfig cfg = base;
    cfg.c_dist = dist;
    out.push_back({dist, risk_study(cfg)});
  }
  return out;
}

}  // namespace lanova
