#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "afd/trainer.hpp"

namespace afd {

// Strict parsing: unknown keys are rejected with field-level diagnostics.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

PretrainConfig parse_pretrain_config(const nlohmann::json& j);
PretrainConfig load_pretrain_config(const std::string& path);
nlohmann::json pretrain_config_to_json(const PretrainConfig& cfg);

}  // namespace afd
