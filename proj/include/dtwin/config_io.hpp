#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtwin/config.hpp"

namespace dtwin {

inline constexpr int kConfigVersion = 1;

struct LoadedConfig {
  SimConfig config;
  std::vector<std::string> defaulted;  // "section.key" entries that fell back to defaults
};

/// Parses a JSON config. Numeric fields accept plain SI numbers or strings
/// with units ("100 mW", "5 MHz", "0.5 GHz", "100 ms", "1 Mbit").
/// Throws std::invalid_argument naming the offending field.
LoadedConfig parse_config(const nlohmann::json& doc);
LoadedConfig load_config(const std::filesystem::path& path);

/// Full effective config, every field present, in SI.
nlohmann::json config_to_json(const SimConfig& cfg);

/// Range and consistency checks; throws naming the field.
void validate_config(const SimConfig& cfg);

/// FNV-1a over the canonical dump of the effective config.
std::uint64_t config_hash(const SimConfig& cfg);
std::string hash_hex(std::uint64_t h);

/// Parses "<number> <unit>" for the given unit family
/// ("power", "frequency", "bits", "time", "length").
double parse_quantity(const std::string& text, const std::string& family);

}  // namespace dtwin
