#include "simcan/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "simcan/error.hpp"

namespace simcan {

namespace {

constexpr double kKmhToMps = 1.0 / 3.6;

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool finite_state(const VehicleState& s) {
  for (double v : {s.t, s.x, s.y, s.heading, s.speed, s.wheel_speed, s.throttle, s.brake, s.steering,
                   s.lateral_offset, s.oob_fraction}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// Lane-keeping verdict accumulated tick by tick.
class LaneOracle {
 public:
  LaneOracle(const ScenarioSpec& spec, double road_length) : spec_(spec), road_length_(road_length) {
    result_.scenario = spec.name;
  }

  /// Records one state; returns true when the run must stop.
  bool observe(const VehicleState& state, double s_on_road) {
    ++result_.ticks;
    result_.sim_duration = state.t;
    if (!finite_state(state)) {
      fail(FailReason::numeric_fault);
      return true;
    }
    result_.max_oob_fraction = std::max(result_.max_oob_fraction, state.oob_fraction);
    if (state.oob_fraction > spec_.oob) {
      fail(FailReason::oob_exceeded);
      if (spec_.interrupt) return true;
    }
    if (s_on_road >= road_length_ - vehicle::kGoalTolerance) {
      reached_end_ = true;
      return true;
    }
    if (state.t >= spec_.duration_limit) {
      fail(FailReason::duration_limit);
      return true;
    }
    return false;
  }

  TestResult finish() {
    if (!reached_end_ && result_.reason == FailReason::none) fail(FailReason::duration_limit);
    return result_;
  }

 private:
  void fail(FailReason reason) {
    if (result_.reason != FailReason::none) return;
    result_.outcome = Outcome::fail;
    result_.reason = reason;
  }

  const ScenarioSpec& spec_;
  double road_length_;
  TestResult result_;
  bool reached_end_ = false;
};

double projection_window(double speed, double dt) { return 15.0 + speed * dt; }

[[noreturn]] void yaml_fail(const std::filesystem::path& path, const YAML::Mark& mark, const std::string& what) {
  throw ParseError(path.string(), static_cast<std::size_t>(mark.line + 1), static_cast<std::size_t>(mark.column + 1),
                   what);
}

template <typename T>
T yaml_get(const std::filesystem::path& path, const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    yaml_fail(path, node.Mark(), "malformed field '" + key + "'");
  }
}

}  // namespace

void ScenarioSpec::validate() const {
  const std::string where = "scenario '" + name + "': ";
  if (waypoints.size() < 2) throw ConfigError(where + "at least 2 waypoints required");
  if (!(lane_width > 0.0)) throw ConfigError(where + "lane_width must be positive");
  if (!(oob >= 0.0 && oob <= 1.0)) throw ConfigError(where + "oob must lie in [0, 1]");
  if (!(max_speed_kmh > 0.0)) throw ConfigError(where + "max_speed must be positive");
  if (!(rf > 0.0)) throw ConfigError(where + "rf must be positive");
  if (!(duration_limit > 0.0)) throw ConfigError(where + "duration_limit must be positive");
  if (!(time_step > 0.0 && time_step <= 1.0)) throw ConfigError(where + "time_step must lie in (0, 1] s");
  try {
    RoadCurve road(waypoints);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + e.what());
  }
}

const std::vector<std::string_view>& vehicle_channels() {
  static const std::vector<std::string_view> names{"t",        "x",     "y",        "heading",        "speed",
                                                   "wheel_speed", "throttle", "brake", "steering", "lateral_offset",
                                                   "oob_fraction"};
  return names;
}

std::optional<double> channel_value(const VehicleState& s, std::string_view channel) {
  if (channel == "t") return s.t;
  if (channel == "x") return s.x;
  if (channel == "y") return s.y;
  if (channel == "heading") return s.heading;
  if (channel == "speed") return s.speed;
  if (channel == "wheel_speed") return s.wheel_speed;
  if (channel == "throttle") return s.throttle;
  if (channel == "brake") return s.brake;
  if (channel == "steering") return s.steering;
  if (channel == "lateral_offset") return s.lateral_offset;
  if (channel == "oob_fraction") return s.oob_fraction;
  return std::nullopt;
}

std::string_view to_string(Outcome outcome) { return outcome == Outcome::pass ? "pass" : "fail"; }

std::string_view to_string(FailReason reason) {
  switch (reason) {
    case FailReason::none: return "none";
    case FailReason::oob_exceeded: return "oob_exceeded";
    case FailReason::duration_limit: return "duration_limit";
    case FailReason::numeric_fault: return "numeric_fault";
  }
  return "none";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  if (text == "pass") return Outcome::pass;
  if (text == "fail") return Outcome::fail;
  return std::nullopt;
}

std::optional<FailReason> parse_fail_reason(std::string_view text) {
  for (FailReason r : {FailReason::none, FailReason::oob_exceeded, FailReason::duration_limit, FailReason::numeric_fault}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

double oob_fraction(double lateral_offset, double lane_width, double vehicle_width) {
  const double outside = (std::abs(lateral_offset) + vehicle_width / 2.0) - lane_width / 2.0;
  return std::clamp(outside / vehicle_width, 0.0, 1.0);
}

double wheel_speed_rpm(double speed_mps) {
  return speed_mps / (2.0 * std::numbers::pi * vehicle::kWheelRadius) * 60.0;
}

ScenarioSpec load_scenario(const std::filesystem::path& path, const ScenarioDefaults& defaults) {
  if (!std::filesystem::exists(path)) throw Error("scenario file not found: " + path.string());
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::ParserException& e) {
    yaml_fail(path, e.mark, e.msg);
  } catch (const YAML::Exception& e) {
    throw Error("cannot read scenario file " + path.string() + ": " + e.what());
  }
  if (!root.IsMap()) yaml_fail(path, root.Mark(), "scenario file must be a key/value map");

  ScenarioSpec spec;
  spec.name = path.stem().string();
  spec.max_speed_kmh = defaults.max_speed_kmh;
  spec.rf = defaults.rf;
  spec.oob = defaults.oob;
  spec.interrupt = defaults.interrupt;

  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const YAML::Node& value = kv.second;
    if (key == "name") {
      spec.name = yaml_get<std::string>(path, value, key);
    } else if (key == "waypoints") {
      if (!value.IsSequence()) yaml_fail(path, value.Mark(), "malformed field 'waypoints': expected a list");
      for (const auto& wp : value) {
        if (wp.IsSequence() && wp.size() == 2) {
          spec.waypoints.emplace_back(yaml_get<double>(path, wp[0], key), yaml_get<double>(path, wp[1], key));
        } else if (wp.IsMap() && wp["x"] && wp["y"]) {
          spec.waypoints.emplace_back(yaml_get<double>(path, wp["x"], key), yaml_get<double>(path, wp["y"], key));
        } else {
          yaml_fail(path, wp.Mark(), "malformed waypoint: expected [x, y] or {x:, y:}");
        }
      }
    } else if (key == "lane_width") {
      spec.lane_width = yaml_get<double>(path, value, key);
    } else if (key == "max_speed") {
      spec.max_speed_kmh = yaml_get<double>(path, value, key);
    } else if (key == "rf") {
      spec.rf = yaml_get<double>(path, value, key);
    } else if (key == "oob") {
      spec.oob = yaml_get<double>(path, value, key);
    } else if (key == "interrupt") {
      spec.interrupt = yaml_get<bool>(path, value, key);
    } else if (key == "seed") {
      spec.seed = yaml_get<std::int64_t>(path, value, key);
    } else if (key == "duration_limit") {
      spec.duration_limit = yaml_get<double>(path, value, key);
    } else if (key == "time_step") {
      spec.time_step = yaml_get<double>(path, value, key);
    } else if (key == "trace") {
      std::filesystem::path trace = yaml_get<std::string>(path, value, key);
      spec.trace = trace.is_absolute() ? trace : path.parent_path() / trace;
    } else {
      std::cerr << "warning: " << path.string() << ":" << kv.first.Mark().line + 1 << ": unknown scenario key '" << key
                << "' ignored\n";
    }
  }
  spec.validate();
  return spec;
}

TestResult drive(const ScenarioSpec& spec, const StateObserver& observer) {
  spec.validate();
  const RoadCurve road(spec.waypoints);
  LaneOracle oracle(spec, road.total_length());

  const double v_max = spec.max_speed_kmh * kKmhToMps;
  const double dt = spec.time_step;
  Point2 position = spec.waypoints.front();
  const Point2 start_dir = road.tangent_at(0.0);
  double heading = std::atan2(start_dir.y(), start_dir.x());
  double speed = 0.0;
  double s_hint = 0.0;

  for (std::size_t tick = 0;; ++tick) {
    const double t = static_cast<double>(tick) * dt;
    const RoadProjection proj = road.project(position, s_hint, projection_window(speed, dt));
    s_hint = proj.s;

    const double curvature = std::abs(road.curvature_at(proj.s));
    const double v_curve = std::sqrt(spec.rf * vehicle::kLateralAccel / std::max(curvature, vehicle::kCurvatureEpsilon));
    const double v_target = std::min(v_max, v_curve);
    const double accel = std::clamp(vehicle::kSpeedGain * (v_target - speed), -vehicle::kMaxDecel, vehicle::kMaxAccel);

    // Pure pursuit towards the centerline point one lookahead ahead.
    const double lookahead = std::max(vehicle::kMinLookahead, vehicle::kLookaheadGain * speed);
    const Point2 to_target = road.point_at(proj.s + lookahead) - position;
    const Point2 forward(std::cos(heading), std::sin(heading));
    const double alpha = std::atan2(cross(forward, to_target), forward.dot(to_target));
    const double distance = std::max(to_target.norm(), 1e-9);
    const double steer = std::clamp(std::atan2(2.0 * vehicle::kWheelbase * std::sin(alpha), distance),
                                    -vehicle::kMaxSteer, vehicle::kMaxSteer);

    VehicleState state;
    state.t = t;
    state.x = position.x();
    state.y = position.y();
    state.heading = heading;
    state.speed = speed;
    state.wheel_speed = wheel_speed_rpm(speed);
    state.throttle = accel > 0.0 ? accel / vehicle::kMaxAccel : 0.0;
    state.brake = accel < 0.0 ? -accel / vehicle::kMaxDecel : 0.0;
    state.steering = steer * 180.0 / std::numbers::pi;
    state.lateral_offset = proj.lateral_offset;
    state.oob_fraction = oob_fraction(proj.lateral_offset, spec.lane_width);

    const bool stop = oracle.observe(state, proj.s);
    if (observer) observer(state);
    if (stop) break;

    position += speed * dt * forward;
    heading += speed / vehicle::kWheelbase * std::tan(steer) * dt;
    heading = std::remainder(heading, 2.0 * std::numbers::pi);
    speed = std::max(0.0, speed + accel * dt);
  }
  return oracle.finish();
}

DriveRun drive(const ScenarioSpec& spec) {
  DriveRun run;
  run.result = drive(spec, [&](const VehicleState& s) { run.states.push_back(s); });
  return run;
}

std::vector<VehicleState> parse_trace(std::string_view text, const std::string& source) {
  static constexpr std::string_view kRequired[] = {"t", "x", "y", "heading", "speed", "throttle", "brake", "steering"};

  std::vector<std::string_view> lines;
  for (std::size_t begin = 0; begin < text.size();) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    begin = end + 1;
  }
  if (lines.empty()) throw ParseError(source, 1, 1, "empty trace: header line required");

  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t begin = 0;
    while (true) {
      std::size_t comma = line.find(',', begin);
      std::string_view cell = line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      cells.push_back(cell);
      if (comma == std::string_view::npos) break;
      begin = comma + 1;
    }
    return cells;
  };

  const auto header = split(lines[0]);
  std::vector<std::optional<std::size_t>> column_of(vehicle_channels().size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& names = vehicle_channels();
    auto it = std::find(names.begin(), names.end(), header[c]);
    if (it == names.end()) throw ParseError(source, 1, 1, "unknown trace column '" + std::string(header[c]) + "'");
    column_of[static_cast<std::size_t>(it - names.begin())] = c;
  }
  for (std::string_view req : kRequired) {
    const auto& names = vehicle_channels();
    auto idx = static_cast<std::size_t>(std::find(names.begin(), names.end(), req) - names.begin());
    if (!column_of[idx]) throw ParseError(source, 1, 1, "trace header lacks column '" + std::string(req) + "'");
  }

  std::vector<VehicleState> states;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::size_t record = states.size() + 1;
    const auto cells = split(lines[li]);
    if (cells.size() != header.size()) {
      throw ParseError(source, li + 1, 1,
                       "record " + std::to_string(record) + ": expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()));
    }
    std::vector<double> values(vehicle_channels().size(), 0.0);
    for (std::size_t ch = 0; ch < column_of.size(); ++ch) {
      if (!column_of[ch]) continue;
      std::string_view cell = cells[*column_of[ch]];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(source, li + 1, 1,
                         "record " + std::to_string(record) + ": malformed value '" + std::string(cell) + "' for " +
                             std::string(vehicle_channels()[ch]));
      }
      values[ch] = v;
    }
    VehicleState s;
    s.t = values[0];
    s.x = values[1];
    s.y = values[2];
    s.heading = values[3];
    s.speed = values[4];
    s.wheel_speed = values[5];
    s.throttle = values[6];
    s.brake = values[7];
    s.steering = values[8];
    s.lateral_offset = values[9];
    s.oob_fraction = values[10];
    if (!column_of[5]) s.wheel_speed = wheel_speed_rpm(s.speed);
    if (!states.empty() && s.t < states.back().t) {
      throw ParseError(source, li + 1, 1,
                       "record " + std::to_string(record) + ": timestamp " + std::to_string(s.t) +
                           " precedes previous record");
    }
    states.push_back(s);
  }
  return states;
}

std::vector<VehicleState> replay_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_trace(buffer.str(), path.string());
}

void write_trace(const std::filesystem::path& path, const std::vector<VehicleState>& states) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write trace file " + path.string());
  const auto& names = vehicle_channels();
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  char buf[64];
  for (const VehicleState& s : states) {
    const double values[] = {s.t,        s.x,     s.y,     s.heading,  s.speed,         s.wheel_speed,
                             s.throttle, s.brake, s.steering, s.lateral_offset, s.oob_fraction};
    for (std::size_t i = 0; i < std::size(values); ++i) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
      out << (i ? "," : "") << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing trace file " + path.string());
}

TestResult evaluate_trace(const ScenarioSpec& spec, std::vector<VehicleState>& states, const StateObserver& observer) {
  spec.validate();
  const RoadCurve road(spec.waypoints);
  LaneOracle oracle(spec, road.total_length());
  bool have_hint = false;
  double s_hint = 0.0;
  for (VehicleState& s : states) {
    const Point2 p(s.x, s.y);
    const RoadProjection proj = have_hint ? road.project(p, s_hint, projection_window(s.speed, 1.0)) : road.project(p);
    have_hint = true;
    s_hint = proj.s;
    s.lateral_offset = proj.lateral_offset;
    s.oob_fraction = oob_fraction(proj.lateral_offset, spec.lane_width);
    const bool stop = oracle.observe(s, proj.s);
    if (observer) observer(s);
    if (stop) break;
  }
  return oracle.finish();
}

TestResult run_scenario(const ScenarioSpec& spec, const StateObserver& observer) {
  if (!spec.trace) return drive(spec, observer);
  std::vector<VehicleState> states = replay_trace(*spec.trace);
  return evaluate_trace(spec, states, observer);
}

}  // namespace simcan
