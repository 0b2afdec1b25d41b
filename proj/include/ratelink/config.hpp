#pragma once

// Strict JSON (de)serialization of scenario and sweep descriptions. Unknown
// keys are rejected with the offending path in the message.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ratelink/experiments.hpp"
#include "ratelink/simulation.hpp"

namespace ratelink {

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path = "training");
nlohmann::json train_config_to_json(const TrainConfig& cfg);

SweepSpec sweep_from_json(const nlohmann::json& j);
nlohmann::json sweep_to_json(const SweepSpec& spec);
SweepSpec load_sweep(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ratelink
