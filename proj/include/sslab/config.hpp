#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sslab/trainer.hpp"

namespace sslab {

/// Raised for any malformed or unknown configuration input; the message
/// names the offending key. The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses the flat line-oriented `key = value` grammar: one pair per line,
/// `#` starts a comment, blank lines ignored. Duplicate keys are an error.
std::vector<std::pair<std::string, std::string>> parse_flat_config(
    const std::string& text);

/// Builds a TrainConfig from parsed pairs; unknown keys are rejected by name.
TrainConfig config_from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs);

/// Applies one `key=value` override string on top of existing pairs.
void apply_override(std::vector<std::pair<std::string, std::string>>& pairs,
                    const std::string& assignment);

TrainConfig load_config_file(const std::string& path,
                             const std::vector<std::string>& overrides);

/// Full configuration snapshot in a fixed key order, defaults materialized.
/// Identical effective configurations produce identical text.
std::string canonical_config_text(const TrainConfig& cfg);

/// FNV-1a hash of the canonical snapshot (seed included), printed as hex.
std::uint64_t config_run_id(const TrainConfig& cfg);
std::string run_id_string(const TrainConfig& cfg);

std::string scheme_name(const WeightingScheme& scheme);
std::string ua_target_name(UaTargetMode mode);

}  // namespace sslab
