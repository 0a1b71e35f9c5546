#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/road.hpp"

namespace simcan {

/// Fixed parameters of the built-in vehicle model and oracle.
namespace vehicle {
inline constexpr double kTimeStep = 0.05;          // s, one CAN emission per tick
inline constexpr double kWheelbase = 2.5;          // m
inline constexpr double kWidth = 1.8;              // m
inline constexpr double kWheelRadius = 0.3;        // m
inline constexpr double kLateralAccel = 2.0;       // m/s^2, cornering budget before rf scaling
inline constexpr double kMaxAccel = 3.0;           // m/s^2
inline constexpr double kMaxDecel = 6.0;           // m/s^2
inline constexpr double kSpeedGain = 1.0;          // 1/s, proportional speed controller
inline constexpr double kMaxSteer = 0.6108652382;  // rad (35 deg)
inline constexpr double kMinLookahead = 5.0;       // m
inline constexpr double kLookaheadGain = 0.5;      // s
inline constexpr double kCurvatureEpsilon = 1e-6;  // 1/m
inline constexpr double kGoalTolerance = 0.5;      // m before the road end counts as reached
}  // namespace vehicle

/// Scenario-level values that a run configuration provides as defaults.
struct ScenarioDefaults {
  double max_speed_kmh = 50.0;
  double rf = 1.5;
  double oob = 0.3;
  bool interrupt = false;
};

struct ScenarioSpec {
  std::string name;
  std::vector<Point2> waypoints;
  double lane_width = 4.0;
  double max_speed_kmh = 50.0;
  double rf = 1.5;
  double oob = 0.3;
  bool interrupt = false;
  std::int64_t seed = 0;
  double duration_limit = 120.0;
  double time_step = vehicle::kTimeStep;  ///< s
  /// When set, states are replayed from this trace instead of simulated.
  std::optional<std::filesystem::path> trace;

  /// Throws ConfigError on invariant violation.
  void validate() const;
};

struct VehicleState {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;         ///< rad
  double speed = 0.0;           ///< m/s
  double wheel_speed = 0.0;     ///< rpm
  double throttle = 0.0;        ///< [0, 1]
  double brake = 0.0;           ///< [0, 1]
  double steering = 0.0;        ///< deg, front wheel angle
  double lateral_offset = 0.0;  ///< m, positive left of the centerline
  double oob_fraction = 0.0;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Names of the VehicleState channels, usable in mapping files.
const std::vector<std::string_view>& vehicle_channels();
/// Value of a named channel; nullopt for unknown names.
std::optional<double> channel_value(const VehicleState& state, std::string_view channel);

enum class Outcome { pass, fail };
enum class FailReason { none, oob_exceeded, duration_limit, numeric_fault };

std::string_view to_string(Outcome outcome);
std::string_view to_string(FailReason reason);
std::optional<Outcome> parse_outcome(std::string_view text);
std::optional<FailReason> parse_fail_reason(std::string_view text);

struct TestResult {
  std::string scenario;
  Outcome outcome = Outcome::pass;
  FailReason reason = FailReason::none;
  double max_oob_fraction = 0.0;
  double sim_duration = 0.0;
  std::size_t ticks = 0;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

/// Fraction of the vehicle body outside the lane, in [0, 1].
double oob_fraction(double lateral_offset, double lane_width, double vehicle_width = vehicle::kWidth);

double wheel_speed_rpm(double speed_mps);

ScenarioSpec load_scenario(const std::filesystem::path& path, const ScenarioDefaults& defaults = {});

using StateObserver = std::function<void(const VehicleState&)>;

/// Simulates the scenario with the kinematic bicycle model, calling `observer`
/// for every tick (including t = 0). Pure function of `spec`.
TestResult drive(const ScenarioSpec& spec, const StateObserver& observer);

struct DriveRun {
  std::vector<VehicleState> states;
  TestResult result;
};
DriveRun drive(const ScenarioSpec& spec);

/// Reads a trace (CSV with a header naming at least t,x,y,heading,speed,
/// throttle,brake,steering). Missing wheel_speed is derived from speed.
/// Throws ParseError naming the record for malformed lines or decreasing t.
std::vector<VehicleState> replay_trace(const std::filesystem::path& path);
std::vector<VehicleState> parse_trace(std::string_view text, const std::string& source = "<trace>");

/// Writes every VehicleState field with round-trip precision.
void write_trace(const std::filesystem::path& path, const std::vector<VehicleState>& states);

/// Applies the lane oracle of `spec` to an externally produced state stream,
/// filling lateral_offset and oob_fraction from the road projection.
TestResult evaluate_trace(const ScenarioSpec& spec, std::vector<VehicleState>& states, const StateObserver& observer);

/// drive() or, for specs with a trace, replay + evaluate_trace().
TestResult run_scenario(const ScenarioSpec& spec, const StateObserver& observer);

}  // namespace simcan
