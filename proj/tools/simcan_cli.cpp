// simcan command-line entry point: `label-tests` (generator + labeling) and
// `monitor` (receiver/decoder).

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "simcan/config.hpp"
#include "simcan/env.hpp"
#include "simcan/monitor.hpp"
#include "simcan/runner.hpp"

namespace {

struct FlagSpec {
  const char* key;
  const char* help;
  bool boolean = false;
};

// clang-format off
const FlagSpec kLabelTestFlags[] = {
    {"home", "simulator installation path (accepted, unused by the built-in simulator)"},
    {"user", "simulator user path (accepted, unused by the built-in simulator)"},
    {"tests", "directory containing scenario files (*.yaml, *.yml)"},
    {"rf", "risk factor scaling cornering speed (default 1.5)"},
    {"oob", "out-of-bound tolerance fraction in [0, 1] (default 0.3)"},
    {"max_speed", "maximum speed in km/h (default 50)"},
    {"interrupt", "stop a scenario at its first violation", true},
    {"obstacles", "accepted, ignored", true},
    {"bump_dist", "accepted, ignored"},
    {"delineator_dist", "accepted, ignored"},
    {"tree_dist", "accepted, ignored"},
    {"field_of_view", "accepted, ignored"},
    {"canbus", "enable CAN frame generation", true},
    {"can_stdout", "print CAN frames to stdout", true},
    {"can_dbc", "path to the CAN database (DBC) file"},
    {"can_dbc_map", "path to the DBC map file (JSON bindings)"},
    {"can_interface", "transport: udp, inproc or socketcan"},
    {"can_channel", "channel, e.g. vcan0 or 127.0.0.1:9000"},
    {"can_bitrate", "bus bitrate in bit/s used for pacing (default 250000)"},
    {"influxdb_bucket", "InfluxDB bucket; enables the time-series output"},
    {"influxdb_org", "InfluxDB organization"},
    {"report", "results file (default label_tests_report.json)"},
    {"pacing", "pace channel emission to the bitrate (default: on when a channel is set)", true},
    {"jobs", "parallel scenarios when no output layer is enabled (default 1)"},
};
// clang-format on

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-driven CAN traffic generator and receiver"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "YAML configuration file (command: + options:)");
  std::string dotenv_path = ".env";
  app.add_option("--env-file", dotenv_path, "dotenv file read before the process environment")->capture_default_str();

  CLI::App* label = app.add_subcommand("label-tests", "run scenarios, emit CAN frames and label pass/fail");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const FlagSpec& f : kLabelTestFlags) {
    std::string names = std::string("--") + f.key;
    if (dashed(f.key) != f.key) names += ",--" + dashed(f.key);
    std::string& slot = flag_values[f.key];
    flag_options[f.key] = f.boolean ? label->add_flag(names + "{true}", slot, f.help)
                                    : label->add_option(names, slot, f.help);
  }

  CLI::App* monitor = app.add_subcommand("monitor", "receive, decode and print CAN traffic");
  simcan::MonitorOptions monitor_options;
  double timeout_s = 2.0;
  std::size_t max_frames = 0;
  monitor->add_option("--channel", monitor_options.channel, "transport descriptor, e.g. udp:127.0.0.1:9000")->required();
  monitor->add_option("--dbc", monitor_options.dbc_path, "CAN database file")->required();
  monitor->add_option("--expect", monitor_options.expectations, "message.signal:min:max:count (repeatable)");
  monitor->add_option("--timeout", timeout_s, "exit after this many idle seconds")->capture_default_str();
  monitor->add_option("--count", max_frames, "exit after this many frames");

  CLI11_PARSE(app, argc, argv);

  if (monitor->parsed()) {
    monitor_options.idle_timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
    if (max_frames > 0) monitor_options.max_frames = max_frames;
    return simcan::run_monitor(monitor_options, std::cout, std::cerr);
  }

  if (!label->parsed() && config_path.empty()) {
    std::cerr << app.help();
    return simcan::kExitError;
  }

  std::map<std::string, std::optional<std::string>> overrides;
  for (const auto& [key, option] : flag_options) {
    if (option->count() > 0) overrides[key] = flag_values[key];
  }

  try {
    const auto config = simcan::load_config(
        config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path), overrides);
    const auto env = simcan::Environment::load(dotenv_path);
    return simcan::label_tests_main(config, env, {std::cout, std::cerr});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return simcan::kExitError;
  }
}
