#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "simcan/config.hpp"
#include "simcan/scenario.hpp"

namespace simcan {

struct RunReport {
  std::vector<TestResult> results;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::chrono::duration<double> wall_time{0};
  std::size_t frames_emitted = 0;
  std::size_t clamp_events = 0;
};

/// Exit-code contract: 0 every scenario passed, 1 at least one failed,
/// 2 nothing was labeled (configuration or IO error, no scenarios).
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitError = 2 };

int exit_code(const RunReport& report);

/// Scenario files (*.yaml, *.yml) below `dir`, recursively, sorted.
std::vector<std::filesystem::path> discover_scenarios(const std::filesystem::path& dir);

struct RunStreams {
  std::ostream& console;  ///< stdout sink layer
  std::ostream& log;      ///< warnings and summary
};

/// Runs every scenario through simulator -> mapping -> sink stack and labels
/// it. Throws ConfigError / Error / TransportError when the run cannot
/// proceed. Returns an empty report when no scenario exists.
RunReport run_label_tests(const RunConfig& config, const Environment& env, RunStreams streams);

/// JSON results file, one record per scenario. wall_time is not persisted so
/// identical runs give identical files.
void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);
/// "1 passed, 1 failed"
std::string summary_line(const RunReport& report);

/// Full `label-tests` command: run, write report, print summary, map errors
/// to exit codes.
int label_tests_main(const RunConfig& config, const Environment& env, RunStreams streams);

}  // namespace simcan
