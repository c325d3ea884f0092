#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "config.hpp"
#include "io.hpp"
#include "lanova/baselines.hpp"
#include "lanova/error.hpp"
#include "lanova/inference.hpp"
#include "lanova/nuisance.hpp"
#include "lanova/simulation.hpp"
#include "lanova/solver.hpp"

namespace lanova::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

struct OutputOptions {
  bool as_json = false;
  std::string path;
};

struct InputOptions {
  std::string path;
  std::string format;
  bool logit = false;
  double logit_scale = 1.0;
};

struct CorrectionOptions {
  std::optional<double> kappa;
  std::optional<double> pi_c;
};

struct LoadedInput {
  DenseTensor y;
  json meta;
};

// Plain text: one "key: value" line per scalar.
class TextReport {
 public:
  void line(const std::string& key, double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    line(key, os.str());
  }
  void line(const std::string& key, bool v) { line(key, std::string(v ? "true" : "false")); }
  void line(const std::string& key, std::size_t v) { line(key, std::to_string(v)); }
  void line(const std::string& key, const std::string& v) { os_ << key << ": " << v << '\n'; }
  void raw(const std::string& text) { os_ << text; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
  cmd->add_flag("--json", o.as_json, "Emit a JSON document");
  cmd->add_option("--output", o.path, "Write the report to this file instead of stdout");
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--input", in.path, "Tensor file or CSV matrix")->required();
  cmd->add_option("--format", in.format, "csv or tensor (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "tensor"}));
  cmd->add_flag("--logit", in.logit, "Apply log(x / (1 - x)) to every value before estimation");
  cmd->add_option("--logit-scale", in.logit_scale, "Divide values by this before the logit (e.g. 100 for percentages)")
      ->check(CLI::PositiveNumber);
}

void add_correction_options(CLI::App* cmd, CorrectionOptions& c) {
  auto* kappa = cmd->add_option("--kappa", c.kappa, "Assumed excess kurtosis of the interactions");
  auto* pi = cmd->add_option("--pi-c", c.pi_c, "Assumed inclusion probability of spike-and-slab interactions");
  kappa->excludes(pi);
  pi->excludes(kappa);
}

LoadedInput load_input(const InputOptions& in) {
  const std::filesystem::path path(in.path);
  const FileFormat format = in.format.empty() ? guess_format(path) : parse_format(in.format);
  LoadedInput out{read_input(path, format), json::object()};
  if (in.logit) logit_transform(out.y, in.logit_scale);
  out.meta["path"] = in.path;
  out.meta["format"] = format == FileFormat::csv ? "csv" : "tensor";
  out.meta["dims"] = out.y.dims();
  out.meta["cells"] = out.y.size();
  out.meta["transform"] = in.logit ? "logit" : "none";
  if (in.logit) out.meta["logit_scale"] = in.logit_scale;
  return out;
}

std::optional<double> resolve_kappa(const CorrectionOptions& c) {
  if (c.kappa) return *c.kappa;
  if (c.pi_c) return kurtosis_from_inclusion(*c.pi_c);
  return std::nullopt;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json nuisance_json(const NuisanceEstimates& e) {
  return {{"sigma4_c_raw", e.sigma4_c_raw}, {"sigma2_c", e.sigma2_c},   {"sigma2_z", e.sigma2_z},
          {"lambda_c", number_or_null(e.lambda_c)}, {"clipped_c", e.clipped_c}, {"clipped_z", e.clipped_z}};
}

json lower_order_json(const LowerOrderVariances& lo) {
  return {{"sigma2_a_raw", lo.sigma2_a_raw},
          {"sigma2_b_raw", lo.sigma2_b_raw},
          {"sigma2_a", lo.sigma2_a},
          {"sigma2_b", lo.sigma2_b},
          {"lambda_a", number_or_null(lo.lambda_a)},
          {"lambda_b", number_or_null(lo.lambda_b)},
          {"clipped_a", lo.clipped_a},
          {"clipped_b", lo.clipped_b}};
}

json test_json(const TestResult& t) {
  return {{"statistic", t.statistic},
          {"p_value", t.p_value},
          {"reject", t.reject},
          {"alpha", t.alpha},
          {"critical_value", normal_quantile(1.0 - t.alpha)}};
}

json rate_json(const RateEstimate& r) {
  return {{"hits", r.hits}, {"reps", r.reps}, {"rate", r.rate}, {"se", r.se}};
}

void text_nuisance(TextReport& t, const NuisanceEstimates& e, const std::string& prefix = "") {
  t.line(prefix + "sigma4_c_raw", e.sigma4_c_raw);
  t.line(prefix + "sigma2_c", e.sigma2_c);
  t.line(prefix + "sigma2_z", e.sigma2_z);
  t.line(prefix + "lambda_c", e.lambda_c);
  t.line(prefix + "clipped_c", e.clipped_c);
  t.line(prefix + "clipped_z", e.clipped_z);
}

void text_test(TextReport& t, const TestResult& r) {
  t.line("statistic", r.statistic);
  t.line("p_value", r.p_value);
  t.line("reject", r.reject);
  t.line("alpha", r.alpha);
}

json header(const std::string& command) { return {{"command", command}, {"schema_version", kSchemaVersion}}; }

void emit(const OutputOptions& o, const json& doc, const TextReport& text, std::ostream& out) {
  const std::string body = o.as_json ? doc.dump(2) + "\n" : text.str();
  if (o.path.empty()) {
    out << body;
    return;
  }
  std::ofstream file(o.path);
  if (!file) throw FileError("cannot write " + o.path);
  file << body;
  if (!file) throw FileError("failed writing " + o.path);
}

std::string mode_label(unsigned mask, std::size_t order) {
  if (mask == 0) return "mean";
  std::string label = "effect";
  for (std::size_t k = 0; k < order; ++k) {
    if (mask & (1u << k)) label += "_" + std::to_string(k + 1);
  }
  return label;
}

json modes_of(unsigned mask, std::size_t order) {
  json modes = json::array();
  for (std::size_t k = 0; k < order; ++k) {
    if (mask & (1u << k)) modes.push_back(k + 1);
  }
  return modes;
}

// ---- estimate -------------------------------------------------------------

struct EstimateArgs {
  InputOptions in;
  CorrectionOptions corr;
  OutputOptions out;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const LoadedInput in = load_input(a.in);
  const NuisanceEstimates raw = estimate_nuisance(in.y);
  const auto kappa = resolve_kappa(a.corr);
  const NuisanceEstimates used = kappa ? kurtosis_correction(raw, *kappa) : raw;

  json doc = header("estimate");
  doc["input"] = in.meta;
  doc["nuisance"] = nuisance_json(used);
  doc["kappa"] = kappa ? json(*kappa) : json(nullptr);
  doc["uncorrected"] = kappa ? nuisance_json(raw) : json(nullptr);
  std::optional<LowerOrderVariances> lo;
  if (in.y.order() == 2) lo = estimate_lower_order_variances(in.y);
  doc["lower_order"] = lo ? lower_order_json(*lo) : json(nullptr);

  TextReport t;
  text_nuisance(t, used);
  if (kappa) t.line("kappa", *kappa);
  if (lo) {
    t.line("sigma2_a", lo->sigma2_a);
    t.line("sigma2_b", lo->sigma2_b);
  }
  emit(a.out, doc, t, out);
  return kExitOk;
}

// ---- test -----------------------------------------------------------------

struct TestArgs {
  InputOptions in;
  double alpha = 0.05;
  OutputOptions out;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
  const LoadedInput in = load_input(a.in);
  const NuisanceEstimates est = estimate_nuisance(in.y);
  const TestResult r = heavy_tail_test(est, in.y.size(), a.alpha);
  json doc = header("test");
  doc["input"] = in.meta;
  const json fields = test_json(r);
  for (const auto& [k, v] : fields.items()) doc[k] = v;
  doc["nuisance"] = nuisance_json(est);
  TextReport t;
  text_test(t, r);
  emit(a.out, doc, t, out);
  return kExitOk;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  InputOptions in;
  CorrectionOptions corr;
  OutputOptions out;
  bool penalize_main = false;
  bool dump_c = false;
  std::string blocks_dir;
  double alpha = 0.05;
  double tol = SolverOptions{}.tol;
  std::size_t max_sweeps = SolverOptions{}.max_sweeps;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const LoadedInput in = load_input(a.in);
  const NuisanceEstimates raw = estimate_nuisance(in.y);
  const auto kappa = resolve_kappa(a.corr);
  const NuisanceEstimates nu = kappa ? kurtosis_correction(raw, *kappa) : raw;

  SolverOptions opts;
  opts.tol = a.tol;
  opts.max_sweeps = a.max_sweeps;
  opts.penalize_lower_order = a.penalize_main;
  std::optional<LowerOrderVariances> lo;
  if (a.penalize_main) {
    if (in.y.order() != 2) throw std::invalid_argument("--penalize-main needs matrix input");
    lo = estimate_lower_order_variances(in.y);
  }
  const LanovaFit fit = lo ? fit_lanova_full(in.y, nu, *lo, opts) : fit_lanova(in.y, nu, opts);
  // A constant-plus-additive input has no variation left to test.
  std::optional<TestResult> test;
  if (raw.sigma2_c + raw.sigma2_z > 0.0) test = heavy_tail_test(raw, in.y.size(), a.alpha);

  json doc = header("fit");
  doc["input"] = in.meta;
  doc["nuisance"] = nuisance_json(nu);
  doc["kappa"] = kappa ? json(*kappa) : json(nullptr);
  doc["lower_order"] = lo ? lower_order_json(*lo) : json(nullptr);
  doc["test"] = test ? test_json(*test) : json(nullptr);
  doc["route"] = to_string(fit.route);
  doc["penalized_main"] = fit.penalized_lower_order;
  const bool has_objective = nu.sigma2_z > 0.0;
  doc["solver"] = {{"iterations", fit.iterations},
                   {"converged", fit.converged},
                   {"initial_objective", fit.objective_trace.empty() ? json(nullptr) : json(fit.objective_trace.front())},
                   {"final_objective", has_objective ? json(objective(fit, in.y, nu, lo ? &*lo : nullptr)) : json(nullptr)}};

  TextReport t;
  t.line("route", std::string(to_string(fit.route)));
  text_nuisance(t, nu);
  if (test) text_test(t, *test);
  t.line("iterations", fit.iterations);
  t.line("converged", fit.converged);

  json blocks = json::array();
  const std::size_t order = fit.blocks.order();
  for (unsigned mask = 0; mask < fit.blocks.effects.size(); ++mask) {
    const std::size_t size = fit.blocks.effects[mask].size();
    const std::size_t nonzero = fit.nonzero_counts[mask];
    const double percent = 100.0 * static_cast<double>(nonzero) / static_cast<double>(size);
    blocks.push_back({{"name", mode_label(mask, order)},
                      {"modes", modes_of(mask, order)},
                      {"size", size},
                      {"nonzero", nonzero},
                      {"percent", percent}});
    t.line(mode_label(mask, order) + ".nonzero", std::to_string(nonzero) + " / " + std::to_string(size));
  }
  doc["blocks"] = blocks;
  if (a.dump_c) {
    const DenseTensor& c = fit.interactions();
    doc["interactions"] = {{"dims", c.dims()}, {"values", std::vector<double>(c.values().begin(), c.values().end())}};
  }

  if (!a.blocks_dir.empty()) {
    const std::filesystem::path dir(a.blocks_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw FileError("cannot create " + dir.string());
    for (unsigned mask = 0; mask < fit.blocks.effects.size(); ++mask) {
      write_tensor_file(dir / (mode_label(mask, order) + ".tensor"), fit.blocks.effects[mask]);
    }
    write_tensor_file(dir / "fitted.tensor", fit.fitted);
  }
  emit(a.out, doc, t, out);
  return kExitOk;
}

// ---- power ----------------------------------------------------------------

struct PowerArgs {
  std::string dist = "laplace";
  std::vector<double> phi2{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  std::vector<double> cells{100, 400, 1000};
  std::vector<double> pi_c{0.1, 0.5};
  double alpha = 0.05;
  OutputOptions out;
};

int cmd_power(const PowerArgs& a, std::ostream& out) {
  const bool laplace = a.dist == "laplace";
  json rows = json::array();
  TextReport t;
  t.raw(laplace ? "phi2,p,power\n" : "pi_c,phi2,p,power\n");
  const std::vector<double> pis = laplace ? std::vector<double>{std::nan("")} : a.pi_c;
  for (double pi : pis) {
    for (double cells : a.cells) {
      for (double phi2 : a.phi2) {
        const double power =
            laplace ? power_laplace(phi2, cells, a.alpha) : power_bernoulli_normal(phi2, pi, cells, a.alpha);
        json row = json::object();
        if (!laplace) row["pi_c"] = pi;
        row["phi2"] = phi2;
        row["p"] = cells;
        row["power"] = power;
        rows.push_back(row);
        std::ostringstream line;
        line.precision(10);
        if (!laplace) line << pi << ',';
        line << phi2 << ',' << cells << ',' << power << '\n';
        t.raw(line.str());
      }
    }
  }
  json doc = header("power");
  doc["dist"] = a.dist;
  doc["alpha"] = a.alpha;
  doc["rows"] = rows;
  emit(a.out, doc, t, out);
  return kExitOk;
}

// ---- simulate / compare ---------------------------------------------------

struct StudyArgs {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  OutputOptions out;
};

StudyConfig load_study(const StudyArgs& a, bool force_risk) {
  KeyValues kv;
  if (!a.config.empty()) kv = read_key_values(a.config);
  for (const auto& s : a.sets) {
    auto [key, value] = split_assignment(s);
    kv[key] = value;
  }
  if (a.seed) kv["seed"] = std::to_string(*a.seed);
  if (force_risk) {
    if (kv.count("study") && kv.at("study") != "risk") {
      throw std::invalid_argument("compare runs risk studies; drop study=" + kv.at("study"));
    }
    kv["study"] = "risk";
  }
  return make_study_config(kv);
}

json risk_table_json(const RiskTable& table) {
  json entries = json::array();
  for (const auto& e : table.entries) {
    entries.push_back({{"name", e.name}, {"mse", e.mse}, {"se", e.se}, {"log_relative_risk", e.log_relative_risk}});
  }
  return {{"n_reps", table.n_reps}, {"estimators", entries}};
}

void risk_table_text(TextReport& t, const std::string& dist, const RiskTable& table) {
  for (const auto& e : table.entries) {
    std::ostringstream line;
    line.precision(10);
    line << '"' << dist << "\"," << e.name << ',' << e.mse << ',' << e.se << ',' << e.log_relative_risk << '\n';
    t.raw(line.str());
  }
}

int run_study(const StudyConfig& cfg, const OutputOptions& o, const std::string& command, std::ostream& out) {
  json doc = header(command);
  doc["study"] = to_string(cfg.study);
  json config = json::object();
  for (const auto& [k, v] : cfg.entries) config[k] = v;
  doc["config"] = config;
  TextReport t;
  t.line("study", std::string(to_string(cfg.study)));
  t.line("dist", cfg.sim.c_dist.describe());

  switch (cfg.study) {
    case Study::special_case: {
      const auto rates = special_case_rate_study(cfg.sim);
      doc["result"] = {{"additive", rate_json(rates.additive)}, {"saturated", rate_json(rates.saturated)}};
      t.line("additive_rate", rates.additive.rate);
      t.line("additive_se", rates.additive.se);
      t.line("saturated_rate", rates.saturated.rate);
      break;
    }
    case Study::level: {
      const RateEstimate r = cfg.sim.c_dist.kind == InteractionDist::Kind::normal
                                 ? test_calibration_study(cfg.sim, cfg.alpha)
                                 : rejection_rate_study(cfg.sim, cfg.alpha);
      doc["result"] = {{"alpha", cfg.alpha}, {"rejection", rate_json(r)}};
      t.line("rejection_rate", r.rate);
      t.line("rejection_se", r.se);
      break;
    }
    case Study::power: {
      const PowerComparison p = power_study(cfg.sim, cfg.alpha);
      doc["result"] = {{"alpha", cfg.alpha}, {"phi2", p.phi2}, {"predicted", p.predicted}, {"empirical", rate_json(p.empirical)}};
      t.line("phi2", p.phi2);
      t.line("predicted", p.predicted);
      t.line("empirical", p.empirical.rate);
      t.line("empirical_se", p.empirical.se);
      break;
    }
    case Study::bias: {
      const BiasCheck b = bias_study(cfg.sim);
      doc["result"] = {{"mean_sigma4_raw", b.sigma4_raw.mean}, {"se", b.sigma4_raw.se}, {"reps", b.sigma4_raw.reps},
                       {"truth", b.truth}, {"expected", b.expected}};
      t.line("mean_sigma4_raw", b.sigma4_raw.mean);
      t.line("se", b.sigma4_raw.se);
      t.line("expected", b.expected);
      t.line("truth", b.truth);
      break;
    }
    case Study::misspecification: {
      const MisspecificationCheck m = misspecification_study(cfg.sim);
      doc["result"] = {{"kappa", m.kappa},
                       {"expected_ratio", m.expected_ratio},
                       {"median_ratio", m.median_ratio},
                       {"expected_sigma2_z", m.expected_sigma2_z},
                       {"median_sigma2_z", m.median_sigma2_z}};
      t.line("kappa", m.kappa);
      t.line("expected_ratio", m.expected_ratio);
      t.line("median_ratio", m.median_ratio);
      t.line("expected_sigma2_z", m.expected_sigma2_z);
      t.line("median_sigma2_z", m.median_sigma2_z);
      break;
    }
    case Study::risk: {
      // Risk tables print as plain CSV for plotting.
      t = TextReport();
      t.raw("dist,estimator,mse,se,log_relative_risk\n");
      if (cfg.grid.empty()) {
        const RiskTable table = risk_study(cfg.sim);
        doc["result"] = risk_table_json(table);
        risk_table_text(t, cfg.sim.c_dist.describe(), table);
      } else {
        const auto grid = cfg.grid == "exp_power" ? exp_power_grid() : bernoulli_normal_grid();
        json points = json::array();
        for (const auto& point : risk_grid(cfg.sim, grid)) {
          json p = risk_table_json(point.table);
          p["dist"] = point.dist.describe();
          points.push_back(p);
          risk_table_text(t, point.dist.describe(), point.table);
        }
        doc["result"] = {{"grid", cfg.grid}, {"points", points}};
      }
      break;
    }
  }
  emit(o, doc, t, out);
  return kExitOk;
}

void add_study_options(CLI::App* cmd, StudyArgs& a) {
  cmd->add_option("--config", a.config, "Flat key = value study file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.sets, "Override one config entry (key=value); repeatable");
  cmd->add_option("--seed", a.seed, "Master seed");
  add_output_options(cmd, a.out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LANOVA penalization: sparse interaction estimation for matrices and tensors", "lanova"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lanova 0.1.0");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Moment-based nuisance parameter estimates");
  add_input_options(c_est, est.in);
  add_correction_options(c_est, est.corr);
  add_output_options(c_est, est.out);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Penalized fit of the interactions");
  add_input_options(c_fit, fit.in);
  add_correction_options(c_fit, fit.corr);
  add_output_options(c_fit, fit.out);
  c_fit->add_flag("--penalize-main", fit.penalize_main, "Also penalize row and column effects (matrices)");
  c_fit->add_flag("--dump-c", fit.dump_c, "Include the interaction estimate in the JSON report");
  c_fit->add_option("--blocks-dir", fit.blocks_dir, "Write every fitted block as a tensor file here");
  c_fit->add_option("--alpha", fit.alpha, "Level of the reported heavy-tail test")->check(CLI::Range(0.0, 1.0));
  c_fit->add_option("--tol", fit.tol, "Relative objective change for convergence")->check(CLI::PositiveNumber);
  c_fit->add_option("--max-sweeps", fit.max_sweeps, "Sweep limit")->check(CLI::PositiveNumber);

  TestArgs test;
  auto* c_test = app.add_subcommand("test", "Test for heavy-tailed (sparse) interactions");
  add_input_options(c_test, test.in);
  add_output_options(c_test, test.out);
  c_test->add_option("--alpha", test.alpha, "Test level")->check(CLI::Range(0.0, 1.0));

  PowerArgs power;
  auto* c_power = app.add_subcommand("power", "Asymptotic power of the test over a grid");
  c_power->add_option("--dist", power.dist, "laplace or bernoulli_normal")
      ->check(CLI::IsMember({"laplace", "bernoulli_normal"}));
  c_power->add_option("--phi2", power.phi2, "Variance ratios")->delimiter(',');
  c_power->add_option("--p", power.cells, "Total cell counts")->delimiter(',');
  c_power->add_option("--pi-c", power.pi_c, "Inclusion probabilities (bernoulli_normal)")->delimiter(',');
  c_power->add_option("--alpha", power.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  add_output_options(c_power, power.out);

  StudyArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run a Monte Carlo study from a config file");
  add_study_options(c_sim, sim);

  StudyArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Risk comparison against baseline estimators");
  add_study_options(c_cmp, cmp);

  std::vector<const char*> argv{"lanova"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (c_est->parsed()) return cmd_estimate(est, out);
    if (c_fit->parsed()) return cmd_fit(fit, out);
    if (c_test->parsed()) return cmd_test(test, out);
    if (c_power->parsed()) return cmd_power(power, out);
    if (c_sim->parsed()) return run_study(load_study(sim, false), sim.out, "simulate", out);
    if (c_cmp->parsed()) return run_study(load_study(cmp, true), cmp.out, "compare", out);
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitModel;
  }
  return kExitUsage;
}

}  // namespace lanova::cli
