#include "simcan/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "simcan/error.hpp"

namespace simcan {

namespace {

const std::vector<std::string_view> kIgnoredKeys{"obstacles", "bump_dist", "delineator_dist", "tree_dist",
                                                 "field_of_view", "home", "user"};

bool is_null_text(const std::optional<std::string>& v) { return !v || *v == "null" || *v == "~" || v->empty(); }

std::string require(std::string_view key, const std::optional<std::string>& v) {
  if (!v) throw ConfigError("option '" + std::string(key) + "' must not be null");
  return *v;
}

bool to_bool(std::string_view key, const std::optional<std::string>& v) {
  const std::string text = require(key, v);
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "true" || lower == "yes" || lower == "on" || lower == "1") return true;
  if (lower == "false" || lower == "no" || lower == "off" || lower == "0") return false;
  throw ConfigError("option '" + std::string(key) + "' expects a boolean, got '" + text + "'");
}

double to_double(std::string_view key, const std::optional<std::string>& v) {
  const std::string text = require(key, v);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError("option '" + std::string(key) + "' expects a number, got '" + text + "'");
  }
  return value;
}

std::optional<double> to_optional_double(std::string_view key, const std::optional<std::string>& v) {
  if (is_null_text(v)) return std::nullopt;
  return to_double(key, v);
}

std::int64_t to_int(std::string_view key, const std::optional<std::string>& v) {
  const std::string text = require(key, v);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("option '" + std::string(key) + "' expects an integer, got '" + text + "'");
  }
  return value;
}

std::optional<std::string> to_optional_string(const std::optional<std::string>& v) {
  if (is_null_text(v)) return std::nullopt;
  return v;
}

std::optional<std::string> scalar_text(const YAML::Node& node, const std::string& source, const std::string& key) {
  if (node.IsNull()) return std::nullopt;
  if (!node.IsScalar()) {
    throw ParseError(source, static_cast<std::size_t>(node.Mark().line + 1), static_cast<std::size_t>(node.Mark().column + 1),
                     "option '" + key + "' must be a scalar");
  }
  return node.Scalar();
}

}  // namespace

const std::vector<std::string_view>& option_keys() {
  static const std::vector<std::string_view> keys{
      "command",   "home",        "user",          "tests",         "rf",           "oob",
      "max_speed", "interrupt",   "obstacles",     "bump_dist",     "delineator_dist", "tree_dist",
      "field_of_view", "canbus",  "can_stdout",    "can_dbc",       "can_dbc_map",  "can_interface",
      "can_channel", "can_bitrate", "influxdb_bucket", "influxdb_org", "report",     "pacing",
      "jobs"};
  return keys;
}

void set_option(RunConfig& c, std::string_view key, const std::optional<std::string>& v) {
  if (std::find(kIgnoredKeys.begin(), kIgnoredKeys.end(), key) != kIgnoredKeys.end()) {
    c.warnings.push_back("option '" + std::string(key) + "' has no effect with the built-in simulator; ignored");
  }
  if (key == "command") c.command = require(key, v);
  else if (key == "home") c.home = to_optional_string(v);
  else if (key == "user") c.user = to_optional_string(v);
  else if (key == "tests") c.tests = require(key, v);
  else if (key == "rf") c.rf = to_double(key, v);
  else if (key == "oob") c.oob = to_double(key, v);
  else if (key == "max_speed") c.max_speed = to_double(key, v);
  else if (key == "interrupt") c.interrupt = to_bool(key, v);
  else if (key == "obstacles") c.obstacles = is_null_text(v) ? false : to_bool(key, v);
  else if (key == "bump_dist") c.bump_dist = to_optional_double(key, v);
  else if (key == "delineator_dist") c.delineator_dist = to_optional_double(key, v);
  else if (key == "tree_dist") c.tree_dist = to_optional_double(key, v);
  else if (key == "field_of_view") c.field_of_view = to_optional_double(key, v);
  else if (key == "canbus") c.canbus = to_bool(key, v);
  else if (key == "can_stdout") c.can_stdout = to_bool(key, v);
  else if (key == "can_dbc") c.can_dbc = to_optional_string(v);
  else if (key == "can_dbc_map") c.can_dbc_map = to_optional_string(v);
  else if (key == "can_interface") c.can_interface = to_optional_string(v).value_or("");
  else if (key == "can_channel") c.can_channel = to_optional_string(v).value_or("");
  else if (key == "can_bitrate") c.can_bitrate = to_int(key, v);
  else if (key == "influxdb_bucket") c.influxdb_bucket = to_optional_string(v);
  else if (key == "influxdb_org") c.influxdb_org = to_optional_string(v);
  else if (key == "report") c.report = require(key, v);
  else if (key == "pacing") c.pacing = is_null_text(v) ? std::nullopt : std::optional<bool>(to_bool(key, v));
  else if (key == "jobs") c.jobs = static_cast<int>(to_int(key, v));
  else c.warnings.push_back("unknown option '" + std::string(key) + "' ignored");
}

void RunConfig::validate() const {
  if (command != "label-tests") throw ConfigError("unsupported command '" + command + "' (expected 'label-tests')");
  if (tests.empty()) throw ConfigError("option 'tests' (scenario directory) is required");
  if (!std::filesystem::is_directory(tests)) throw ConfigError("tests directory '" + tests.string() + "' does not exist");
  if (!(oob >= 0.0 && oob <= 1.0)) throw ConfigError("option 'oob' must lie in [0, 1]");
  if (!(rf > 0.0)) throw ConfigError("option 'rf' must be positive");
  if (!(max_speed > 0.0)) throw ConfigError("option 'max_speed' must be positive");
  if (can_bitrate <= 0) throw ConfigError("option 'can_bitrate' must be positive");
  if (jobs < 1) throw ConfigError("option 'jobs' must be at least 1");
  if (canbus) {
    if (!can_dbc) throw ConfigError("canbus is enabled but 'can_dbc' is not set");
    if (!can_dbc_map) throw ConfigError("canbus is enabled but 'can_dbc_map' is not set");
  }
}

ScenarioDefaults RunConfig::scenario_defaults() const { return {max_speed, rf, oob, interrupt}; }

std::string RunConfig::channel_descriptor() const {
  if (can_channel.empty()) return {};
  if (can_channel.find(':') != std::string::npos && can_interface.empty()) return can_channel;
  if (can_interface.empty()) return "socketcan:" + can_channel;
  const std::string scheme_prefix = can_interface + ":";
  if (can_channel.starts_with(scheme_prefix)) return can_channel;
  return scheme_prefix + can_channel;
}

SinkConfig RunConfig::sink_config(const Environment& env) const {
  SinkConfig sc;
  if (!canbus) return sc;
  sc.stdout_enabled = can_stdout;
  sc.channel = channel_descriptor();
  sc.channel_label = can_channel.empty() ? "can0" : can_channel;
  sc.bitrate = can_bitrate;
  sc.pacing = pacing.value_or(!sc.channel.empty());
  sc.influx_bucket = influxdb_bucket.value_or("");
  sc.influx_org = influxdb_org.value_or("");
  sc.apply_environment(env);
  return sc;
}

RunConfig parse_config(std::string_view yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column + 1), e.msg);
  }
  RunConfig config;
  if (root.IsNull()) return config;
  if (!root.IsMap()) throw ConfigError(source + ": configuration must be a key/value map");

  auto apply_map = [&](const YAML::Node& map) {
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      try {
        set_option(config, key, scalar_text(kv.second, source, key));
      } catch (const ConfigError& e) {
        throw ConfigError(source + ":" + std::to_string(kv.second.Mark().line + 1) + ": " + e.what());
      }
    }
  };

  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (key == "options") {
      if (!kv.second.IsMap()) throw ConfigError(source + ": 'options' must be a map");
      apply_map(kv.second);
    } else {
      YAML::Node single(YAML::NodeType::Map);
      single[key] = kv.second;
      apply_map(single);
    }
  }
  return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::string text;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open configuration file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  return parse_config(text, path.string());
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::map<std::string, std::optional<std::string>>& overrides) {
  RunConfig config = path ? load_config_file(*path) : RunConfig{};
  for (const auto& [key, value] : overrides) set_option(config, key, value);
  config.validate();
  return config;
}

}  // namespace simcan
