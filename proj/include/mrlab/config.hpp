#pragma once

// Flat `key = value` experiment configuration.
//
//   # comment
//   variant = g_pmr2
//   dataset = cond_bimodal
//   lambda_aux = 10
//
// Omitted keys keep their defaults; unknown keys are errors.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mrlab/trainer.hpp"

namespace mrlab {

TrainConfig parse_config_text(std::string_view text, const std::string& source = "<config>");
TrainConfig parse_config(const std::filesystem::path& path);

/// Every key in canonical order; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const TrainConfig& cfg);

/// All recognized keys, in canonical order.
std::vector<std::string> config_keys();
bool is_numeric_key(const std::string& key);

/// Sets one key from its textual value (same rules as the file parser).
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& cfg, const std::string& key);

/// "s<seed>-<16 hex digits of FNV-1a over the serialized config>".
std::string run_id(const TrainConfig& cfg);

}  // namespace mrlab
