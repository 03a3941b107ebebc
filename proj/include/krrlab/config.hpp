#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "krrlab/harness.hpp"

namespace krrlab {

/// Thrown for malformed or invalid experiment configs; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Levels used when a config omits `levels`.
std::vector<double> default_levels();

NoiseModel noise_from_json(const nlohmann::json& j);
nlohmann::json noise_to_json(const NoiseModel& model);

/// Parses the experiment schema. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Applies `key=value` with a dotted key path; the value is read as JSON when
/// it parses, otherwise as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Reads the file, applies overrides in order, then parses and validates.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace krrlab
