#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tihdp/trainer.hpp"

namespace tihdp {

// Thrown with one line per problem, e.g. "missing key: priority.k_phi".
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses and validates a run configuration document. Every scenario,
// observation, priority, network, and ppo key is required; the physics and
// placement blocks are optional overrides of the built-in constants.
TrainConfig parse_config(const nlohmann::json& doc);
TrainConfig load_config_file(const std::string& path);

// Full snapshot with every parameter explicit; parse_config(resolved) is the
// identity on the TrainConfig.
nlohmann::ordered_json resolved_config(const TrainConfig& cfg);

}  // namespace tihdp
