#pragma once

#include "pcbf/barrier.hpp"
#include "pcbf/controller.hpp"
#include "pcbf/dynamics.hpp"
#include "pcbf/qp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcbf {

struct Segment {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::UnitX();

  double length() const { return (end - start).norm(); }
  Vec2 direction() const { return (end - start).normalized(); }
};

/// Main road with an on-ramp joining it at merge_point.
struct Road {
  Segment main_road{Vec2(-200.0, 0.0), Vec2(400.0, 0.0)};
  Segment ramp;
  Vec2 merge_point = Vec2(100.0, 0.0);

  /// Straight main road along +x through the origin and a ramp of the given
  /// length meeting it at merge_point from below at angle_deg.
  static Road standard(double angle_deg = 15.0, double ramp_length = 250.0,
                       Vec2 merge_point = Vec2(100.0, 0.0));
};

enum class Role { kEgo, kObject, kNeighbor };

/// kMain follows the main road, kRamp the ramp and then the main road past the
/// merge point, kFree a straight line through the start along `heading`.
enum class Lane { kMain, kRamp, kFree };

struct VehicleSpec {
  std::string id;
  Role role = Role::kNeighbor;
  Lane lane = Lane::kMain;
  Vec2 heading = Vec2::UnitX();  // kFree only
  VehicleState initial;
  AlphaVector alpha{1.0, 0.0};
  double desired_speed = 10.0;
  double gain = 0.5;
  AccelLimits limits;
  bool safety_filter = true;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Road road = Road::standard();
  std::vector<VehicleSpec> vehicles;
  double dt = kDefaultDt;
  long horizon = 3000;
  double r_safe = 5.0;
  std::uint64_t seed = 0;
  double lookahead = 20.0;  // m, route-following target distance

  /// Throws ConfigError naming the first violated rule.
  void validate() const;
  /// Every rule with its verdict; used by the CLI validator.
  std::vector<std::pair<std::string, std::optional<std::string>>> check_rules() const;

  std::optional<std::size_t> find_role(Role role) const;
};

/// Route-following helpers for one vehicle.
class Route {
 public:
  Route(const Road& road, const VehicleSpec& spec);

  /// Arc-length coordinate of the closest route point.
  double progress(const Vec2& position) const;
  double merge_progress() const { return merge_s_; }
  bool passed_merge(const Vec2& position) const { return progress(position) >= merge_s_; }
  Vec2 point_at(double s) const;
  /// Unit vector toward the route point `lookahead` ahead of the position.
  Vec2 lane_direction(const Vec2& position, double lookahead) const;

 private:
  Vec2 first_start_;
  Vec2 first_dir_;
  double first_len_;  // infinite for single-segment routes
  Vec2 second_start_;
  Vec2 second_dir_;
  double merge_s_;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(long step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct StepRecord {
  long step = 0;
  std::vector<VehicleState> states;
  std::vector<ControlInput> inputs;
  std::vector<double> pair_h;
  std::vector<char> infeasible;
};

struct Trajectory {
  std::vector<std::string> vehicle_ids;
  std::vector<std::pair<int, int>> pairs;
  std::vector<StepRecord> steps;

  bool operator==(const Trajectory& other) const;
};

struct TrialMetrics {
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> min_h;             // m^2, per pair
  std::vector<long> merge_step;          // per vehicle, -1 if never passed
  std::vector<char> on_merge_route;      // per vehicle; free-lane paths skip the merge point
  long infeasible_steps = 0;             // vehicle-steps with an infeasible QP
  long vehicle_steps = 0;
  bool collision = false;                // some pair has min_h < -kCollisionTol

  static constexpr double kCollisionTol = 1e-9;

  double infeasible_fraction() const;
  /// Step at which the last vehicle on a main or ramp route passed the merge
  /// point, -1 if one never did. Free-lane vehicles do not count.
  long overall_completion() const;
  double min_h_overall() const;
};

/// Steps every vehicle with its safety filter, synchronously: all inputs are
/// computed from the step-t states before any state is advanced.
class Simulation {
 public:
  using RowsProvider = std::function<std::vector<LinearRow>(long step,
                                                            std::span<const VehicleState>)>;
  using ControlOverride = std::function<ControlInput(long step, std::span<const VehicleState>)>;

  explicit Simulation(ScenarioConfig cfg);

  const ScenarioConfig& config() const { return cfg_; }
  long step_index() const { return step_; }
  std::span<const VehicleState> states() const { return states_; }
  const AlphaVector& alpha(std::size_t v) const { return alphas_[v]; }
  const Route& route(std::size_t v) const { return routes_[v]; }

  void set_alpha(std::size_t v, AlphaVector alpha);
  /// Extra QP rows appended to vehicle v's safety filter.
  void set_extra_rows(std::size_t v, RowsProvider provider);
  /// Replaces vehicle v's controller entirely.
  void set_control_override(std::size_t v, ControlOverride override_fn);

  NominalPlan plan_for(std::size_t v, const VehicleState& state) const;
  SafetyConfig safety_config(std::size_t v) const;

  /// Computes inputs at the current step, records them and advances states.
  const StepRecord& advance();
  /// Records the current state without advancing (closes a log).
  const StepRecord& record_final();

  const Trajectory& trajectory() const { return log_; }

 private:
  StepRecord compute_step() const;

  ScenarioConfig cfg_;
  std::vector<Route> routes_;
  std::vector<AlphaVector> alphas_;
  std::vector<RowsProvider> extra_rows_;
  std::vector<ControlOverride> overrides_;
  std::vector<VehicleState> states_;
  long step_ = 0;
  Trajectory log_;
};

std::vector<double> pair_safety_values(std::span<const VehicleState> states,
                                       std::span<const std::pair<int, int>> pairs, double r_safe);

TrialMetrics compute_metrics(const ScenarioConfig& cfg, const Trajectory& log);

struct TrialResult {
  Trajectory log;
  TrialMetrics metrics;
};

/// Runs the full horizon. Deterministic for a given config.
TrialResult run_trial(const ScenarioConfig& cfg);

/// Euclidean distance between two vehicles at every logged step.
std::vector<double> distance_series(const Trajectory& log, int a, int b);

std::string to_string(Role role);
std::string to_string(Lane lane);
Role role_from_string(const std::string& s);
Lane lane_from_string(const std::string& s);

}  // namespace pcbf
