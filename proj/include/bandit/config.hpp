#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "bandit/experiment.hpp"

namespace bandit {

// JSON <-> ExperimentConfig. Parsing is strict: unknown enum values and
// malformed fields raise ConfigError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Full config echo with every default made explicit.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// FNV-1a digest of the canonicalized (key-sorted, defaults-expanded) config.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace bandit
