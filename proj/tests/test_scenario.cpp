#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "simcan/error.hpp"
#include "simcan/road.hpp"
#include "simcan/scenario.hpp"
#include "support.hpp"

using namespace simcan;
namespace st = simcan::testing;

namespace {

std::vector<Point2> circle_arc(double radius, int segments, double sweep) {
  std::vector<Point2> pts;
  for (int k = 0; k <= segments; ++k) {
    const double a = sweep * k / segments;
    pts.emplace_back(radius * std::sin(a), radius * (1.0 - std::cos(a)));
  }
  return pts;
}

ScenarioSpec straight_spec() {
  ScenarioSpec spec;
  spec.name = "straight";
  spec.waypoints = {{0, 0}, {100, 0}, {200, 0}};
  return spec;
}

ScenarioSpec hairpin_spec() { return load_scenario(st::data_path("suite/hairpin.yaml")); }

}  // namespace

TEST(RoadCurve, StraightSegment) {
  const RoadCurve road({{0, 0}, {100, 0}});
  EXPECT_DOUBLE_EQ(road.total_length(), 100.0);
  for (double s : {0.0, 10.0, 50.0, 99.0, 100.0}) EXPECT_EQ(road.curvature_at(s), 0.0);
  EXPECT_TRUE(road.point_at(25.0).isApprox(Point2(25, 0)));
  EXPECT_TRUE(road.tangent_at(25.0).isApprox(Point2(1, 0)));
}

TEST(RoadCurve, ProjectionGivesArcLengthAndSignedOffset) {
  const RoadCurve road({{0, 0}, {100, 0}});
  const RoadProjection left = road.project(Point2(50, 1.2));
  EXPECT_NEAR(left.s, 50.0, 1e-12);
  EXPECT_NEAR(left.lateral_offset, 1.2, 1e-12);
  const RoadProjection right = road.project(Point2(30, -0.7));
  EXPECT_NEAR(right.s, 30.0, 1e-12);
  EXPECT_NEAR(right.lateral_offset, -0.7, 1e-12);
  const RoadProjection beyond = road.project(Point2(101, 0.5));
  EXPECT_NEAR(beyond.lateral_offset, 0.5, 1e-12);
}

TEST(RoadCurve, CircleCurvatureMatchesAnalyticValue) {
  const RoadCurve road(circle_arc(50.0, 36, std::numbers::pi));
  const double expected = 1.0 / 50.0;
  for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double k = road.curvature_at(frac * road.total_length());
    EXPECT_NEAR(k, expected, 0.1 * expected) << "frac " << frac;
  }
  const RoadCurve mirrored([] {
    auto pts = circle_arc(50.0, 36, std::numbers::pi);
    for (auto& p : pts) p.y() = -p.y();
    return pts;
  }());
  EXPECT_LT(mirrored.curvature_at(0.5 * mirrored.total_length()), 0.0);
}

TEST(RoadCurve, WindowedProjectionAgreesWithGlobal) {
  const RoadCurve road(circle_arc(20.0, 40, 1.5 * std::numbers::pi));
  const Point2 p = road.point_at(30.0) + 0.8 * Point2(0, 1);
  const RoadProjection global = road.project(p);
  const RoadProjection local = road.project(p, 29.0, 10.0);
  EXPECT_NEAR(global.s, local.s, 1e-12);
  EXPECT_NEAR(global.lateral_offset, local.lateral_offset, 1e-12);
}

TEST(RoadCurve, RejectsDegenerateInput) {
  EXPECT_THROW(RoadCurve({{0, 0}}), std::invalid_argument);
  EXPECT_THROW(RoadCurve({{0, 0}, {0, 0}, {1, 0}}), std::invalid_argument);
}

TEST(Oracle, OobFractionCornerCases) {
  EXPECT_EQ(oob_fraction(0.0, 4.0), 0.0);
  EXPECT_EQ(oob_fraction(1.1, 4.0), 0.0);
  EXPECT_NEAR(oob_fraction(2.0, 4.0), 0.5, 1e-12);
  EXPECT_NEAR(oob_fraction(-2.0, 4.0), 0.5, 1e-12);
  EXPECT_EQ(oob_fraction(3.0, 4.0), 1.0);
  EXPECT_EQ(oob_fraction(25.0, 4.0), 1.0);
}

TEST(Oracle, WheelSpeedFollowsWheelRadius) {
  EXPECT_NEAR(wheel_speed_rpm(10.0), 10.0 * 60.0 / (2.0 * std::numbers::pi * 0.3), 1e-9);
  EXPECT_EQ(wheel_speed_rpm(0.0), 0.0);
}

TEST(Drive, StraightRoadPassesWithZeroSteering) {
  const DriveRun run = drive(straight_spec());
  EXPECT_EQ(run.result.outcome, Outcome::pass);
  EXPECT_EQ(run.result.reason, FailReason::none);
  EXPECT_EQ(run.result.max_oob_fraction, 0.0);
  ASSERT_FALSE(run.states.empty());
  for (const auto& s : run.states) {
    EXPECT_EQ(s.steering, 0.0);
    EXPECT_NEAR(s.lateral_offset, 0.0, 1e-9);
    EXPECT_EQ(s.oob_fraction, 0.0);
  }
  EXPECT_EQ(run.result.ticks, run.states.size());
  EXPECT_NEAR(run.states.back().x, 200.0, 1.0);
}

TEST(Drive, HairpinFailsOutOfBounds) {
  const ScenarioSpec spec = hairpin_spec();
  EXPECT_EQ(spec.oob, 0.3);
  const TestResult result = drive(spec).result;
  EXPECT_EQ(result.outcome, Outcome::fail);
  EXPECT_EQ(result.reason, FailReason::oob_exceeded);
  EXPECT_GT(result.max_oob_fraction, 0.3);
}

TEST(Drive, HairpinVerdictSurvivesTimeStepRefinement) {
  for (double dt : {0.025, 0.0125}) {
    ScenarioSpec spec = hairpin_spec();
    spec.time_step = dt;
    const TestResult result = drive(spec).result;
    EXPECT_EQ(result.reason, FailReason::oob_exceeded) << "dt " << dt;
    EXPECT_GT(result.max_oob_fraction, 0.35) << "dt " << dt;
  }
}

TEST(Drive, StraightVerdictSurvivesTimeStepRefinement) {
  ScenarioSpec spec = straight_spec();
  spec.time_step = 0.025;
  EXPECT_EQ(drive(spec).result.outcome, Outcome::pass);
}

TEST(Drive, InterruptStopsAtFirstViolation) {
  ScenarioSpec spec = hairpin_spec();
  const TestResult full = drive(spec).result;
  spec.interrupt = true;
  const TestResult stopped = drive(spec).result;
  EXPECT_EQ(stopped.reason, FailReason::oob_exceeded);
  EXPECT_LT(stopped.ticks, full.ticks);
  EXPECT_LE(stopped.max_oob_fraction, full.max_oob_fraction);
}

TEST(Drive, DurationLimitFailsWhenGoalIsNotReached) {
  ScenarioSpec spec = straight_spec();
  spec.duration_limit = 5.0;
  const TestResult result = drive(spec).result;
  EXPECT_EQ(result.outcome, Outcome::fail);
  EXPECT_EQ(result.reason, FailReason::duration_limit);
}

TEST(Drive, IsDeterministic) {
  const DriveRun a = drive(hairpin_spec());
  const DriveRun b = drive(hairpin_spec());
  EXPECT_EQ(a.result, b.result);
  EXPECT_EQ(a.states, b.states);
}

TEST(Drive, RespectsKinematicLimits) {
  const ScenarioSpec spec = hairpin_spec();
  const DriveRun run = drive(spec);
  const double dt = spec.time_step;
  const double max_steer_deg = 35.0;
  for (std::size_t i = 0; i < run.states.size(); ++i) {
    const VehicleState& s = run.states[i];
    EXPECT_GE(s.speed, 0.0);
    EXPECT_LE(s.speed, 50.0 / 3.6 + 1e-9);
    EXPECT_LE(std::abs(s.steering), max_steer_deg + 1e-9);
    EXPECT_NEAR(s.wheel_speed, wheel_speed_rpm(s.speed), 1e-9);
    EXPECT_GE(s.throttle, 0.0);
    EXPECT_LE(s.throttle, 1.0);
    EXPECT_GE(s.brake, 0.0);
    EXPECT_LE(s.brake, 1.0);
    EXPECT_FALSE(s.throttle > 0.0 && s.brake > 0.0);
    if (i == 0) continue;
    const VehicleState& p = run.states[i - 1];
    const double dv = s.speed - p.speed;
    EXPECT_LE(dv, 3.0 * dt + 1e-9);
    EXPECT_GE(dv, -6.0 * dt - 1e-9);
    const double step = std::hypot(s.x - p.x, s.y - p.y);
    EXPECT_NEAR(step, p.speed * dt, 1e-9);
    const double max_turn = p.speed / 2.5 * std::tan(max_steer_deg * std::numbers::pi / 180.0) * dt;
    EXPECT_LE(std::abs(std::remainder(s.heading - p.heading, 2 * std::numbers::pi)), max_turn + 1e-9);
  }
}

TEST(LoadScenario, AppliesDefaultsAndFileValues) {
  st::TempDir dir("scenario");
  st::write_file(dir / "s.yaml", "name: custom\nwaypoints:\n  - [0, 0]\n  - {x: 50, y: 0}\nlane_width: 3.5\nrf: 2\n");
  ScenarioDefaults defaults;
  defaults.max_speed_kmh = 30.0;
  const ScenarioSpec spec = load_scenario(dir / "s.yaml", defaults);
  EXPECT_EQ(spec.name, "custom");
  ASSERT_EQ(spec.waypoints.size(), 2u);
  EXPECT_TRUE(spec.waypoints[1].isApprox(Point2(50, 0)));
  EXPECT_EQ(spec.lane_width, 3.5);
  EXPECT_EQ(spec.rf, 2.0);
  EXPECT_EQ(spec.max_speed_kmh, 30.0);
  EXPECT_EQ(spec.oob, 0.3);
  EXPECT_EQ(spec.time_step, 0.05);
}

TEST(LoadScenario, NameDefaultsToFileStem) {
  st::TempDir dir("scenario");
  st::write_file(dir / "curvy_road.yaml", "waypoints: [[0, 0], [10, 0]]\n");
  EXPECT_EQ(load_scenario(dir / "curvy_road.yaml").name, "curvy_road");
}

TEST(LoadScenario, SingleWaypointIsRejected) {
  st::TempDir dir("scenario");
  st::write_file(dir / "one.yaml", "waypoints:\n  - [0, 0]\n");
  try {
    load_scenario(dir / "one.yaml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("at least 2 waypoints"), std::string::npos) << e.what();
  }
}

TEST(LoadScenario, MalformedWaypointNamesLocation) {
  st::TempDir dir("scenario");
  st::write_file(dir / "bad.yaml", "waypoints:\n  - [0, 0]\n  - [1, 2, 3]\n");
  try {
    load_scenario(dir / "bad.yaml");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Trace, RoundTripsExactly) {
  st::TempDir dir("trace");
  const DriveRun run = drive(hairpin_spec());
  write_trace(dir / "run.csv", run.states);
  EXPECT_EQ(replay_trace(dir / "run.csv"), run.states);
}

TEST(Trace, ReplayedTraceYieldsSameVerdict) {
  st::TempDir dir("trace");
  const ScenarioSpec spec = hairpin_spec();
  const DriveRun run = drive(spec);
  write_trace(dir / "run.csv", run.states);
  ScenarioSpec replay = spec;
  replay.trace = dir / "run.csv";
  std::size_t observed = 0;
  const TestResult result = run_scenario(replay, [&](const VehicleState&) { ++observed; });
  EXPECT_EQ(result.outcome, run.result.outcome);
  EXPECT_EQ(result.reason, run.result.reason);
  EXPECT_NEAR(result.max_oob_fraction, run.result.max_oob_fraction, 1e-12);
  EXPECT_EQ(observed, run.states.size());
}

TEST(Trace, WheelSpeedColumnIsOptional) {
  const auto states =
      parse_trace("steering,t,x,y,heading,speed,throttle,brake\n0,0,0,0,0,0,1,0\n1.5,0.05,0.1,0,0,2,0.5,0\n");
  ASSERT_EQ(states.size(), 2u);
  EXPECT_EQ(states[1].speed, 2.0);
  EXPECT_EQ(states[1].steering, 1.5);
  EXPECT_EQ(states[1].throttle, 0.5);
  EXPECT_DOUBLE_EQ(states[1].wheel_speed, wheel_speed_rpm(2.0));
}

TEST(Trace, DecreasingTimeIsRejected) {
  try {
    parse_trace("t,x,y,heading,speed,throttle,brake,steering\n0,0,0,0,0,0,0,0\n0.10,1,0,0,1,0,0,0\n"
                "0.05,2,0,0,1,0,0,0\n",
                "bad.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos) << e.what();
  }
}

TEST(Trace, MalformedNumberIsRejected) {
  EXPECT_THROW(parse_trace("t,x,y,heading,speed,throttle,brake,steering\n0,0,zero,0,0,0,0,0\n"), ParseError);
  EXPECT_THROW(parse_trace("t,x,y,heading,speed,throttle,brake,steering\n0,0,0,0\n"), ParseError);
  EXPECT_THROW(parse_trace("t,x,y\n0,0,0\n"), ParseError);
  EXPECT_THROW(parse_trace("t,x,y,heading,speed,throttle,brake,steering,colour\n"), ParseError);
}

TEST(Outcomes, NamesRoundTrip) {
  for (FailReason r : {FailReason::none, FailReason::oob_exceeded, FailReason::duration_limit, FailReason::numeric_fault}) {
    EXPECT_EQ(parse_fail_reason(to_string(r)), r);
  }
  EXPECT_EQ(parse_outcome("fail"), Outcome::fail);
  EXPECT_FALSE(parse_outcome("maybe"));
}
