#pragma once

// Experiment pipelines behind the command-line tool. Each command takes a JSON
// config, runs deterministically from its master seed, and returns the
// artifact files it would write together with an optional gate statistic.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lampshuffler/base_group.hpp"

namespace lampshuffler {

inline constexpr const char* kToolVersion = "0.3.0";

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

struct Artifact {
  std::string name;     // file name relative to the output directory
  std::string content;
};

struct CommandResult {
  std::vector<Artifact> files;
  std::optional<double> gate_value;  // compared against --gate LO:HI
  bool verdict = true;               // built-in pass/fail for verification commands
  std::string summary;               // one human-readable line
};

const std::vector<std::string>& command_names();

// Fills defaults for `command` and validates; throws ConfigError listing every bad field.
json normalize_config(const std::string& command, const json& config);

// FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const json& config);

CommandResult run_command(const std::string& command, const json& config, unsigned threads);

std::vector<std::string> parameter_names(const std::string& command);
// Converts a command-line value for `key` to its JSON form, e.g. group "Zd:2"
// -> {"kind": "Zd", "d": 2}, measure "simple_std" -> {"name": "simple_std"}.
json parse_override(const std::string& command, const std::string& key, const std::string& value);

// "-5..5" -> [-5, 5]
std::pair<std::int64_t, std::int64_t> parse_window(const std::string& s);
// Accepts "1000000", "1e6", "2^20".
std::uint64_t parse_count(const std::string& s);

}  // namespace lampshuffler
