#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/env.hpp"
#include "simcan/scenario.hpp"
#include "simcan/sinks.hpp"

namespace simcan {

/// The `label-tests` options. Key names match the configuration file.
struct RunConfig {
  std::string command = "label-tests";
  std::optional<std::string> home;
  std::optional<std::string> user;
  std::filesystem::path tests;
  double rf = 1.5;
  double oob = 0.3;
  double max_speed = 50.0;  ///< km/h
  bool interrupt = false;
  // Accepted for compatibility, no effect on the built-in simulator.
  bool obstacles = false;
  std::optional<double> bump_dist;
  std::optional<double> delineator_dist;
  std::optional<double> tree_dist;
  std::optional<double> field_of_view;

  bool canbus = false;
  bool can_stdout = false;
  std::optional<std::filesystem::path> can_dbc;
  std::optional<std::filesystem::path> can_dbc_map;
  std::string can_interface;
  std::string can_channel;
  std::int64_t can_bitrate = 250000;
  std::optional<std::string> influxdb_bucket;
  std::optional<std::string> influxdb_org;

  // Tool options without a configuration-file counterpart in older setups.
  std::filesystem::path report = "label_tests_report.json";
  std::optional<bool> pacing;  ///< default: on when a channel is configured
  int jobs = 1;

  /// Non-fatal diagnostics gathered while loading (unknown or ignored keys).
  std::vector<std::string> warnings;

  /// Throws ConfigError on invariant violations.
  void validate() const;

  ScenarioDefaults scenario_defaults() const;
  /// `can_interface:can_channel`, or `can_channel` when it already carries a
  /// scheme; empty when no channel is configured.
  std::string channel_descriptor() const;
  /// Sink layers implied by the options (nothing enabled when canbus is off).
  SinkConfig sink_config(const Environment& env) const;
};

/// Sets one option from its textual value (`std::nullopt` = YAML null).
/// Unknown keys add a warning. Throws ConfigError for malformed values.
void set_option(RunConfig& config, std::string_view key, const std::optional<std::string>& value);

/// All keys accepted by set_option.
const std::vector<std::string_view>& option_keys();

/// Reads a YAML file shaped as `command: ...` plus an `options:` map (a flat
/// map of options is also accepted). Does not validate.
RunConfig load_config_file(const std::filesystem::path& path);
RunConfig parse_config(std::string_view yaml_text, const std::string& source = "<config>");

/// File values first, then `overrides` (command-line flags) on top; validated.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::map<std::string, std::optional<std::string>>& overrides);

}  // namespace simcan
