#include "pcbf/scenario.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace pcbf;
using pcbf::test::vehicle;

namespace {

ScenarioConfig single(long horizon) {
  ScenarioConfig c;
  c.horizon = horizon;
  c.vehicles = {vehicle("ego", Role::kEgo, Lane::kMain, Vec2(0, 0), Vec2(8, 0))};
  c.vehicles[0].desired_speed = 10.0;
  return c;
}

ScenarioConfig head_on() {
  ScenarioConfig c;
  c.horizon = 800;
  c.vehicles = {vehicle("a", Role::kEgo, Lane::kFree, Vec2(-20, 40), Vec2(5, 0)),
                vehicle("b", Role::kNeighbor, Lane::kFree, Vec2(20, 40), Vec2(-5, 0))};
  return c;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("standard road geometry") {
  const Road r = Road::standard(15.0, 250.0, Vec2(100, 0));
  CHECK(r.ramp.end.isApprox(Vec2(100, 0)));
  CHECK(r.ramp.length() == doctest::Approx(250.0));
  CHECK(r.ramp.start.y() < 0.0);
  // [DERIVED] direction (cos 15, sin 15).
  CHECK(r.ramp.direction().y() == doctest::Approx(std::sin(15.0 * std::numbers::pi / 180.0)));
  CHECK(r.main_road.direction().isApprox(Vec2::UnitX()));
}

TEST_CASE("ramp route turns onto the main road at the merge point") {
  const Road road = Road::standard();
  VehicleSpec v = vehicle("m", Role::kObject, Lane::kRamp, road.ramp.start, Vec2());
  const Route route(road, v);
  CHECK(route.merge_progress() == doctest::Approx(250.0));
  CHECK_FALSE(route.passed_merge(road.ramp.start + 10.0 * road.ramp.direction()));
  CHECK(route.passed_merge(Vec2(120, 0)));
  CHECK(route.point_at(260.0).isApprox(Vec2(110, 0)));
  // Past the merge point the lane direction is the main road's.
  CHECK(route.lane_direction(Vec2(150, 0), 20.0).isApprox(Vec2::UnitX()));
}

TEST_CASE("validation names the violated rule") {
  ScenarioConfig c = head_on();
  CHECK_NOTHROW(c.validate());
  c.vehicles[1].id = "a";
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("id_unique"), ConfigError);

  c = head_on();
  c.vehicles[1].initial.position = Vec2(-17, 40);
  const auto rules = c.check_rules();
  const auto it = std::find_if(rules.begin(), rules.end(),
                               [](const auto& r) { return r.first == "initial_separation[a,b]"; });
  REQUIRE(it != rules.end());
  CHECK(it->second.has_value());

  c = head_on();
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = head_on();
  c.vehicles.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("a lone vehicle follows its nominal law") {
  Simulation sim(single(2000));
  const StepRecord& first = sim.advance();
  // [DERIVED] 0.5 * (10 - 8) = 1.
  CHECK(first.inputs[0].acceleration.isApprox(Vec2(1, 0)));
  while (sim.step_index() < 2000) sim.advance();
  CHECK(sim.states()[0].velocity.x() == doctest::Approx(10.0).epsilon(1e-3));
  CHECK(std::abs(sim.states()[0].position.y()) < 1e-12);
}

TEST_CASE("log holds horizon + 1 records") {
  const TrialResult r = run_trial(single(50));
  CHECK(r.log.steps.size() == 51);
  CHECK(r.log.steps.front().step == 0);
  CHECK(r.log.steps.back().step == 50);
  // The closing record carries a filtered input too, so it counts.
  CHECK(r.metrics.vehicle_steps == 51);
}

TEST_CASE("runs are deterministic") {
  const TrialResult a = run_trial(head_on());
  const TrialResult b = run_trial(head_on());
  CHECK(a.log == b.log);
}

TEST_CASE("mirror-symmetric head-on approach stays symmetric and safe") {
  const TrialResult r = run_trial(head_on());
  CHECK_FALSE(r.metrics.collision);
  CHECK(r.metrics.min_h_overall() >= -1e-9);
  for (const auto& rec : r.log.steps) {
    CHECK(rec.states[0].position.x() == doctest::Approx(-rec.states[1].position.x()));
    CHECK(rec.states[0].position.y() == doctest::Approx(rec.states[1].position.y()));
  }
  // The pair closed in but never crossed.
  CHECK(r.log.steps.back().states[0].position.x() < r.log.steps.back().states[1].position.x());
}

TEST_CASE("merge steps and overall completion") {
  ScenarioConfig c;
  c.horizon = 1500;
  c.vehicles = {vehicle("ego", Role::kEgo, Lane::kMain, Vec2(40, 0), Vec2(10, 0)),
                vehicle("free", Role::kNeighbor, Lane::kFree, Vec2(0, 50), Vec2(10, 0))};
  const TrialResult r = run_trial(c);
  // [DERIVED] 60 m at 10 m/s: the ego passes x = 100 after about 600 steps.
  CHECK(r.metrics.merge_step[0] == doctest::Approx(600).epsilon(0.01));
  CHECK(r.metrics.merge_step[1] == -1);
  CHECK(r.metrics.on_merge_route == std::vector<char>{1, 0});
  CHECK(r.metrics.overall_completion() == r.metrics.merge_step[0]);

  TrialMetrics m;
  m.merge_step = {10, -1};
  m.on_merge_route = {1, 1};
  CHECK(m.overall_completion() == -1);
  m.on_merge_route = {1, 0};
  CHECK(m.overall_completion() == 10);
}

TEST_CASE("control override and extra rows") {
  ScenarioConfig c = single(10);
  Simulation sim(c);
  sim.set_extra_rows(0, [](long, std::span<const VehicleState>) {
    return std::vector<LinearRow>{{Vec2(1, 0), 0.25}};
  });
  CHECK(sim.advance().inputs[0].acceleration.x() == doctest::Approx(0.25));
  sim.set_control_override(0, [](long, std::span<const VehicleState>) {
    return ControlInput{Vec2(0, -1)};
  });
  CHECK(sim.advance().inputs[0].acceleration.isApprox(Vec2(0, -1)));
}

TEST_CASE("enum names round-trip") {
  for (Role r : {Role::kEgo, Role::kObject, Role::kNeighbor}) {
    CHECK(role_from_string(to_string(r)) == r);
  }
  for (Lane l : {Lane::kMain, Lane::kRamp, Lane::kFree}) {
    CHECK(lane_from_string(to_string(l)) == l);
  }
  CHECK_THROWS_AS(role_from_string("pilot"), ConfigError);
}

}  // TEST_SUITE
