#pragma once

#include "announce/model.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

namespace announce {

/// Strict parse: every field required, unknown fields rejected.
ProblemConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const ProblemConfig &config);

/// Reads a config document, or a preset when `path_or_preset` names one.
ProblemConfig load_config(const std::filesystem::path &path_or_preset);

} // namespace announce
