#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

namespace autolabel::tools {

// Loads a JSON (.json) or TOML (anything else) config file into a JSON tree.
// TOML tables become nested objects; scalar strings that parse as booleans or
// numbers are converted. Throws Error(kConfig).
nlohmann::json LoadConfigFile(const std::filesystem::path& path);

}  // namespace autolabel::tools
