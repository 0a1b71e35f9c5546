#include "simcan/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "simcan/codec.hpp"
#include "simcan/dbc.hpp"
#include "simcan/error.hpp"
#include "simcan/mapping.hpp"
#include "simcan/sinks.hpp"

namespace simcan {

namespace {

using json = nlohmann::json;

bool is_scenario_file(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".yaml" || ext == ".yml";
}

struct ScenarioOutput {
  TestResult result;
  std::size_t frames = 0;
  std::size_t clamps = 0;
};

/// Runs one scenario; frames go to `sink` when canbus is active.
ScenarioOutput run_one(const std::filesystem::path& file, const RunConfig& config, const DbcDatabase* db,
                       const SignalMapping* mapping, FrameSink* sink) {
  const ScenarioSpec spec = load_scenario(file, config.scenario_defaults());
  ScenarioOutput out;
  ClampCounter clamps;
  StateObserver observer;
  if (db && mapping) {
    observer = [&](const VehicleState& state) {
      for (const CanFrame& frame : build_frames(state, *mapping, *db, &clamps)) {
        if (sink) sink->emit(frame);
        ++out.frames;
      }
    };
  }
  out.result = run_scenario(spec, observer);
  out.clamps = clamps.count;
  return out;
}

}  // namespace

int exit_code(const RunReport& report) {
  if (report.results.empty()) return kExitError;
  return report.failed == 0 ? kExitPass : kExitFail;
}

std::vector<std::filesystem::path> discover_scenarios(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && is_scenario_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.generic_string() < b.generic_string(); });
  return files;
}

RunReport run_label_tests(const RunConfig& config, const Environment& env, RunStreams streams) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  RunReport report;

  const auto files = discover_scenarios(config.tests);
  if (files.empty()) return report;

  std::optional<DbcDatabase> db;
  std::optional<SignalMapping> mapping;
  std::unique_ptr<FrameSink> sink;
  if (config.canbus) {
    db = load_dbc(*config.can_dbc);
    mapping = load_mapping(*config.can_dbc_map, *db);
    sink = open_sink_stack(config.sink_config(env), *db, streams.console);
  }

  std::vector<ScenarioOutput> outputs(files.size());
  const bool parallel = config.jobs > 1 && (!sink || sink->depth() == 0);
  if (config.jobs > 1 && !parallel) {
    streams.log << "warning: --jobs ignored; scenarios run sequentially while output layers are enabled\n";
  }

  if (parallel) {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), files.size());
    for (std::size_t w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
          try {
            outputs[i] = run_one(files[i], config, db ? &*db : nullptr, mapping ? &*mapping : nullptr, nullptr);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t i = 0; i < files.size(); ++i) {
      outputs[i] = run_one(files[i], config, db ? &*db : nullptr, mapping ? &*mapping : nullptr, sink.get());
    }
  }
  if (sink) sink->flush();

  for (ScenarioOutput& out : outputs) {
    (out.result.outcome == Outcome::pass ? report.passed : report.failed) += 1;
    report.frames_emitted += out.frames;
    report.clamp_events += out.clamps;
    report.results.push_back(std::move(out.result));
  }
  report.wall_time = std::chrono::steady_clock::now() - started;
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  json records = json::array();
  for (const TestResult& r : report.results) {
    records.push_back({{"name", r.scenario},
                       {"outcome", std::string(to_string(r.outcome))},
                       {"reason", std::string(to_string(r.reason))},
                       {"max_oob_fraction", r.max_oob_fraction},
                       {"sim_duration", r.sim_duration},
                       {"ticks", r.ticks}});
  }
  json doc = {{"scenarios", records},
              {"passed", report.passed},
              {"failed", report.failed},
              {"frames_emitted", report.frames_emitted},
              {"clamp_events", report.clamp_events}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write report " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("cannot write report " + path.string());
}

RunReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open report " + path.string());
  RunReport report;
  try {
    const json doc = json::parse(in);
    for (const json& rec : doc.at("scenarios")) {
      TestResult r;
      r.scenario = rec.at("name").get<std::string>();
      const auto outcome = parse_outcome(rec.at("outcome").get<std::string>());
      const auto reason = parse_fail_reason(rec.at("reason").get<std::string>());
      if (!outcome || !reason) throw Error("report " + path.string() + ": unknown outcome or reason");
      r.outcome = *outcome;
      r.reason = *reason;
      r.max_oob_fraction = rec.at("max_oob_fraction").get<double>();
      r.sim_duration = rec.at("sim_duration").get<double>();
      r.ticks = rec.at("ticks").get<std::size_t>();
      report.results.push_back(std::move(r));
    }
    report.passed = doc.at("passed").get<std::size_t>();
    report.failed = doc.at("failed").get<std::size_t>();
    report.frames_emitted = doc.at("frames_emitted").get<std::size_t>();
    report.clamp_events = doc.at("clamp_events").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error("malformed report " + path.string() + ": " + e.what());
  }
  return report;
}

std::string summary_line(const RunReport& report) {
  return std::to_string(report.passed) + " passed, " + std::to_string(report.failed) + " failed";
}

int label_tests_main(const RunConfig& config, const Environment& env, RunStreams streams) {
  for (const std::string& w : config.warnings) streams.log << "warning: " << w << '\n';
  try {
    const RunReport report = run_label_tests(config, env, streams);
    if (report.results.empty()) {
      streams.log << "error: no scenarios found in " << config.tests.string() << '\n';
      return kExitError;
    }
    write_report(report, config.report);
    for (const TestResult& r : report.results) {
      streams.log << (r.outcome == Outcome::pass ? "PASS " : "FAIL ") << r.scenario;
      if (r.outcome == Outcome::fail) streams.log << " (" << to_string(r.reason) << ")";
      streams.log << " max_oob=" << r.max_oob_fraction << " ticks=" << r.ticks << '\n';
    }
    streams.log << summary_line(report) << " in " << report.wall_time.count() << " s; " << report.frames_emitted
                << " frames emitted, " << report.clamp_events << " clamp events; report: " << config.report.string()
                << '\n';
    return exit_code(report);
  } catch (const std::exception& e) {
    streams.log << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace simcan
