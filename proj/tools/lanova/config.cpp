#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "io.hpp"

namespace lanova::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw std::invalid_argument("config " + key + ": not a number: " + value);
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("config " + key + ": expected a non-negative integer: " + value);
  }
  return std::stoull(value);
}

Dims to_dims(const std::string& value) {
  std::string spaced = value;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  Dims dims;
  std::string tok;
  while (in >> tok) dims.push_back(static_cast<std::size_t>(to_unsigned("dims", tok)));
  if (dims.size() < 2) throw std::invalid_argument("config dims: need at least two modes");
  return dims;
}

Study to_study(const std::string& value) {
  if (value == "special_case") return Study::special_case;
  if (value == "level") return Study::level;
  if (value == "power") return Study::power;
  if (value == "bias") return Study::bias;
  if (value == "misspecification") return Study::misspecification;
  if (value == "risk") return Study::risk;
  throw std::invalid_argument("config study: unknown study " + value);
}

BaselineSpec to_baseline(const std::string& name) {
  if (name == "mle") return {BaselineKind::mle, 0, {}};
  if (name == "additive") return {BaselineKind::additive, 0, {}};
  if (name == "minimax_universal") return {BaselineKind::minimax_universal, 0, NoiseScale::mad()};
  if (name == "minimax_sure") return {BaselineKind::minimax_sure, 0, NoiseScale::mad()};
  const std::string prefix = "low_rank_";
  if (name.rfind(prefix, 0) == 0) {
    return {BaselineKind::low_rank, static_cast<std::size_t>(to_unsigned("estimators", name.substr(prefix.size()))), {}};
  }
  throw std::invalid_argument("config estimators: unknown estimator " + name);
}

std::vector<BaselineSpec> to_baselines(const std::string& value) {
  std::vector<BaselineSpec> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_baseline(item));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config " + key + ": expected true or false");
}

}  // namespace

const char* to_string(Study study) {
  switch (study) {
    case Study::special_case: return "special_case";
    case Study::level: return "level";
    case Study::power: return "power";
    case Study::bias: return "bias";
    case Study::misspecification: return "misspecification";
    case Study::risk: return "risk";
  }
  return "unknown";
}

std::vector<std::string> known_config_keys() {
  return {"study", "dims",   "dist",  "sigma2_c", "q_c",     "pi_c",       "tau2_c",       "sigma2_z",
          "n_reps", "seed", "alpha", "threads",  "grid",    "estimators", "penalize_main"};
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + text + "'");
  std::string key = trim(text.substr(0, eq));
  if (key.empty()) throw std::invalid_argument("expected key=value, got '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read " + path.string());
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    try {
      auto [key, value] = split_assignment(body);
      kv[key] = value;
    } catch (const std::invalid_argument& e) {
      throw FileError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return kv;
}

StudyConfig make_study_config(const KeyValues& kv) {
  const auto keys = known_config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw std::invalid_argument("config: unknown key " + key);
    }
  }
  auto get = [&](const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  StudyConfig cfg;
  cfg.study = to_study(get("study", "special_case"));
  cfg.sim.dims = to_dims(get("dims", "25 25"));
  cfg.sim.sigma2_z = to_double("sigma2_z", get("sigma2_z", "1"));
  cfg.sim.n_reps = to_unsigned("n_reps", get("n_reps", cfg.study == Study::risk ? "500" : "10000"));
  cfg.sim.seed = to_unsigned("seed", get("seed", std::to_string(cfg.sim.seed)));
  cfg.sim.threads = static_cast<unsigned>(to_unsigned("threads", get("threads", "0")));
  cfg.alpha = to_double("alpha", get("alpha", "0.05"));
  cfg.sim.solver.penalize_lower_order = to_bool("penalize_main", get("penalize_main", "false"));

  const std::string dist = get("dist", cfg.study == Study::level ? "normal" : "laplace");
  const double sigma2_c = to_double("sigma2_c", get("sigma2_c", "1"));
  if (dist == "laplace") {
    cfg.sim.c_dist = InteractionDist::laplace(sigma2_c);
  } else if (dist == "exp_power") {
    cfg.sim.c_dist = InteractionDist::exp_power(sigma2_c, to_double("q_c", get("q_c", "1")));
  } else if (dist == "bernoulli_normal") {
    cfg.sim.c_dist = InteractionDist::bernoulli_normal(to_double("pi_c", get("pi_c", "0.5")),
                                                       to_double("tau2_c", get("tau2_c", "1")));
  } else if (dist == "normal") {
    cfg.sim.c_dist = InteractionDist::normal(sigma2_c);
  } else {
    throw std::invalid_argument("config dist: unknown distribution " + dist);
  }

  cfg.grid = get("grid", "");
  if (!cfg.grid.empty() && cfg.grid != "exp_power" && cfg.grid != "bernoulli_normal") {
    throw std::invalid_argument("config grid: expected exp_power or bernoulli_normal");
  }
  if (!cfg.grid.empty() && cfg.study != Study::risk) throw std::invalid_argument("config grid: only for risk studies");
  cfg.sim.estimators = kv.count("estimators") ? to_baselines(kv.at("estimators")) : default_risk_estimators();
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("config alpha: must lie in (0, 1)");
  cfg.sim.validate();

  cfg.entries = kv;
  cfg.entries["study"] = to_string(cfg.study);
  cfg.entries["dist"] = dist;
  cfg.entries["n_reps"] = std::to_string(cfg.sim.n_reps);
  cfg.entries["seed"] = std::to_string(cfg.sim.seed);
  return cfg;
}

}  // namespace lanova::cli
