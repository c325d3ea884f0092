#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lanova/simulation.hpp"

namespace lanova::cli {

enum class Study { special_case, level, power, bias, misspecification, risk };

/// A simulation study read from a flat `key = value` file.
struct StudyConfig {
  Study study = Study::special_case;
  SimConfig sim;
  double alpha = 0.05;
  /// Empty: single distribution. Otherwise "exp_power" or "bernoulli_normal".
  std::string grid;
  /// Every key as finally resolved, for echoing in reports.
  std::map<std::string, std::string> entries;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment. Throws FileError.
KeyValues read_key_values(const std::filesystem::path& path);
/// Parses "key=value". Throws std::invalid_argument.
std::pair<std::string, std::string> split_assignment(const std::string& text);

/// Builds a study from key-value pairs. Unknown keys and bad values throw
/// std::invalid_argument.
StudyConfig make_study_config(const KeyValues& kv);

const char* to_string(Study study);
std::vector<std::string> known_config_keys();

}  // namespace lanova::cli
