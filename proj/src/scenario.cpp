#include "pcbf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace pcbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_point(const Vec2& a, const Vec2& b) { return (a - b).norm() <= 1e-9; }

double distance_to_line(const Segment& seg, const Vec2& p) {
  const Vec2 d = seg.direction();
  const Vec2 r = p - seg.start;
  return std::abs(d.x() * r.y() - d.y() * r.x());
}

}  // namespace

Road Road::standard(double angle_deg, double ramp_length, Vec2 merge_point) {
  Road road;
  road.merge_point = merge_point;
  road.main_road = {Vec2(merge_point.x() - 300.0, merge_point.y()),
                    Vec2(merge_point.x() + 300.0, merge_point.y())};
  const double a = angle_deg * std::numbers::pi / 180.0;
  road.ramp = {merge_point - ramp_length * Vec2(std::cos(a), std::sin(a)), merge_point};
  return road;
}

std::vector<std::pair<std::string, std::optional<std::string>>> ScenarioConfig::check_rules()
    const {
  std::vector<std::pair<std::string, std::optional<std::string>>> out;
  auto rule = [&](std::string name, bool ok, std::string why) {
    out.emplace_back(std::move(name), ok ? std::nullopt : std::optional<std::string>(why));
  };
  rule("dt_positive", dt > 0.0 && std::isfinite(dt), "dt must be positive");
  rule("horizon_positive", horizon >= 1, "horizon must be at least 1 step");
  rule("r_safe_positive", r_safe > 0.0 && std::isfinite(r_safe), "r_safe must be positive");
  rule("lookahead_positive", lookahead > 0.0, "lookahead must be positive");
  rule("main_road_nondegenerate", road.main_road.length() > 0.0, "main road has zero length");
  rule("ramp_nondegenerate", road.ramp.length() > 0.0, "ramp has zero length");
  rule("ramp_meets_merge_point", same_point(road.ramp.end, road.merge_point),
       "ramp end does not coincide with the merge point");
  rule("merge_point_on_main_road", distance_to_line(road.main_road, road.merge_point) <= 1e-9,
       "merge point is not on the main road");
  rule("vehicles_present", !vehicles.empty(), "no vehicles");

  std::set<std::string> ids;
  for (const auto& v : vehicles) {
    const std::string p = "vehicle[" + v.id + "].";
    rule(p + "id_unique", ids.insert(v.id).second, "duplicate vehicle id");
    bool alpha_ok = v.alpha.size() >= 1;
    for (double c : v.alpha.coefficients()) alpha_ok = alpha_ok && c >= 0.0 && std::isfinite(c);
    rule(p + "alpha_nonnegative", alpha_ok, "alpha coefficients must be non-negative");
    rule(p + "state_finite",
         v.initial.position.allFinite() && v.initial.velocity.allFinite(), "non-finite state");
    rule(p + "gain_positive", v.gain > 0.0, "gain must be positive");
    rule(p + "desired_speed_finite", std::isfinite(v.desired_speed), "non-finite desired speed");
    rule(p + "limits_ordered",
         v.limits.u_min.allFinite() && v.limits.u_max.allFinite() &&
             (v.limits.u_min.array() <= v.limits.u_max.array()).all(),
         "u_min must not exceed u_max");
    rule(p + "heading_nonzero", v.lane != Lane::kFree || v.heading.norm() > 0.0,
         "free lane needs a nonzero heading");
  }
  for (std::size_t a = 0; a < vehicles.size(); ++a) {
    for (std::size_t b = a + 1; b < vehicles.size(); ++b) {
      const double h = (vehicles[a].initial.position - vehicles[b].initial.position).norm();
      rule("initial_separation[" + vehicles[a].id + "," + vehicles[b].id + "]", h > r_safe,
           "vehicles start inside the safety radius");
    }
  }
  return out;
}

void ScenarioConfig::validate() const {
  for (const auto& [name, failure] : check_rules()) {
    if (failure) throw ConfigError(name + ": " + *failure);
  }
}

std::optional<std::size_t> ScenarioConfig::find_role(Role role) const {
  for (std::size_t v = 0; v < vehicles.size(); ++v) {
    if (vehicles[v].role == role) return v;
  }
  return std::nullopt;
}

Route::Route(const Road& road, const VehicleSpec& spec) {
  switch (spec.lane) {
    case Lane::kMain:
      first_start_ = road.main_road.start;
      first_dir_ = road.main_road.direction();
      first_len_ = kInf;
      break;
    case Lane::kRamp:
      first_start_ = road.ramp.start;
      first_dir_ = road.ramp.direction();
      first_len_ = road.ramp.length();
      break;
    case Lane::kFree:
      first_start_ = spec.initial.position;
      first_dir_ = spec.heading.normalized();
      first_len_ = kInf;
      break;
  }
  second_start_ = road.merge_point;
  second_dir_ = road.main_road.direction();
  merge_s_ = std::isinf(first_len_) ? (road.merge_point - first_start_).dot(first_dir_)
                                    : first_len_;
}

double Route::progress(const Vec2& position) const {
  if (std::isinf(first_len_)) return (position - first_start_).dot(first_dir_);
  const double past = (position - second_start_).dot(second_dir_);
  if (past >= 0.0) return first_len_ + past;
  return std::min((position - first_start_).dot(first_dir_), first_len_);
}

Vec2 Route::point_at(double s) const {
  if (s < first_len_) return first_start_ + s * first_dir_;
  return second_start_ + (s - first_len_) * second_dir_;
}

Vec2 Route::lane_direction(const Vec2& position, double lookahead) const {
  const double s = progress(position);
  const Vec2 d = point_at(s + lookahead) - position;
  const double n = d.norm();
  if (n < 1e-9) return s < first_len_ ? first_dir_ : second_dir_;
  return d / n;
}

bool Trajectory::operator==(const Trajectory& other) const {
  if (vehicle_ids != other.vehicle_ids || pairs != other.pairs) return false;
  if (steps.size() != other.steps.size()) return false;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const StepRecord& a = steps[t];
    const StepRecord& b = other.steps[t];
    if (a.step != b.step || a.states != b.states || a.inputs != b.inputs ||
        a.pair_h != b.pair_h || a.infeasible != b.infeasible) {
      return false;
    }
  }
  return true;
}

double TrialMetrics::infeasible_fraction() const {
  return vehicle_steps > 0 ? static_cast<double>(infeasible_steps) / vehicle_steps : 0.0;
}

long TrialMetrics::overall_completion() const {
  long last = -1;
  for (std::size_t v = 0; v < merge_step.size(); ++v) {
    if (v < on_merge_route.size() && !on_merge_route[v]) continue;
    if (merge_step[v] < 0) return -1;
    last = std::max(last, merge_step[v]);
  }
  return last;
}

double TrialMetrics::min_h_overall() const {
  double m = kInf;
  for (double h : min_h) m = std::min(m, h);
  return m;
}

Simulation::Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t n = cfg_.vehicles.size();
  extra_rows_.resize(n);
  overrides_.resize(n);
  for (const auto& v : cfg_.vehicles) {
    routes_.emplace_back(cfg_.road, v);
    alphas_.push_back(v.alpha);
    states_.push_back(v.initial);
    log_.vehicle_ids.push_back(v.id);
  }
  for (int a = 0; a < static_cast<int>(n); ++a) {
    for (int b = a + 1; b < static_cast<int>(n); ++b) log_.pairs.emplace_back(a, b);
  }
  log_.steps.reserve(static_cast<std::size_t>(cfg_.horizon) + 1);
}

void Simulation::set_alpha(std::size_t v, AlphaVector alpha) { alphas_.at(v) = std::move(alpha); }

void Simulation::set_extra_rows(std::size_t v, RowsProvider provider) {
  extra_rows_.at(v) = std::move(provider);
}

void Simulation::set_control_override(std::size_t v, ControlOverride override_fn) {
  overrides_.at(v) = std::move(override_fn);
}

NominalPlan Simulation::plan_for(std::size_t v, const VehicleState& state) const {
  const VehicleSpec& spec = cfg_.vehicles[v];
  return {spec.desired_speed, routes_[v].lane_direction(state.position, cfg_.lookahead),
          spec.gain};
}

SafetyConfig Simulation::safety_config(std::size_t v) const {
  return {cfg_.r_safe, static_cast<int>(alphas_[v].size())};
}

std::vector<double> pair_safety_values(std::span<const VehicleState> states,
                                       std::span<const std::pair<int, int>> pairs, double r_safe) {
  std::vector<double> h;
  h.reserve(pairs.size());
  const SafetyConfig cfg{r_safe, 1};
  for (const auto& [a, b] : pairs) {
    h.push_back(safety_value(states[a].position, states[b].position, cfg));
  }
  return h;
}

StepRecord Simulation::compute_step() const {
  const std::size_t n = states_.size();
  StepRecord rec;
  rec.step = step_;
  rec.states = states_;
  rec.inputs.resize(n);
  rec.infeasible.assign(n, 0);
  rec.pair_h = pair_safety_values(states_, log_.pairs, cfg_.r_safe);

  std::vector<Neighbor> others;
  others.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    const VehicleSpec& spec = cfg_.vehicles[v];
    if (overrides_[v]) {
      rec.inputs[v] = overrides_[v](step_, states_);
      continue;
    }
    const NominalPlan plan = plan_for(v, states_[v]);
    if (!spec.safety_filter) {
      rec.inputs[v] = nominal_control(states_[v], plan, spec.limits);
      continue;
    }
    others.clear();
    for (std::size_t w = 0; w < n; ++w) {
      if (w != v) others.push_back({states_[w], ControlInput{}});
    }
    std::vector<LinearRow> extra;
    if (extra_rows_[v]) extra = extra_rows_[v](step_, states_);
    try {
      const SafeControl sc = safe_control(states_[v], others, alphas_[v], plan, safety_config(v),
                                          spec.limits, cfg_.dt, extra);
      rec.inputs[v] = sc.u;
      rec.infeasible[v] = sc.infeasible ? 1 : 0;
    } catch (const DegenerateConstraintError& e) {
      throw SimulationError(step_, "vehicle " + spec.id + ": " + e.what());
    }
  }
  return rec;
}

const StepRecord& Simulation::advance() {
  log_.steps.push_back(compute_step());
  const StepRecord& rec = log_.steps.back();
  for (std::size_t v = 0; v < states_.size(); ++v) {
    states_[v] = step(states_[v], rec.inputs[v], cfg_.dt);
  }
  ++step_;
  return rec;
}

const StepRecord& Simulation::record_final() {
  log_.steps.push_back(compute_step());
  return log_.steps.back();
}

TrialMetrics compute_metrics(const ScenarioConfig& cfg, const Trajectory& log) {
  TrialMetrics m;
  m.pairs = log.pairs;
  m.min_h.assign(log.pairs.size(), kInf);
  const std::size_t n = log.vehicle_ids.size();
  m.merge_step.assign(n, -1);
  std::vector<Route> routes;
  for (const auto& v : cfg.vehicles) {
    routes.emplace_back(cfg.road, v);
    m.on_merge_route.push_back(v.lane != Lane::kFree);
  }

  for (const StepRecord& rec : log.steps) {
    for (std::size_t p = 0; p < rec.pair_h.size(); ++p) {
      m.min_h[p] = std::min(m.min_h[p], rec.pair_h[p]);
    }
    for (std::size_t v = 0; v < n; ++v) {
      const bool passed = routes[v].passed_merge(rec.states[v].position);
      if (m.on_merge_route[v] && m.merge_step[v] < 0 && passed) m.merge_step[v] = rec.step;
      m.infeasible_steps += rec.infeasible[v];
    }
    m.vehicle_steps += static_cast<long>(n);
  }
  m.collision = std::any_of(m.min_h.begin(), m.min_h.end(),
                            [](double h) { return h < -TrialMetrics::kCollisionTol; });
  return m;
}

TrialResult run_trial(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  for (long t = 0; t < cfg.horizon; ++t) sim.advance();
  sim.record_final();
  TrialResult out{sim.trajectory(), {}};
  out.metrics = compute_metrics(cfg, out.log);
  return out;
}

std::vector<double> distance_series(const Trajectory& log, int a, int b) {
  std::vector<double> d;
  d.reserve(log.steps.size());
  for (const auto& rec : log.steps) {
    d.push_back((rec.states[a].position - rec.states[b].position).norm());
  }
  return d;
}

std::string to_string(Role role) {
  switch (role) {
    case Role::kEgo: return "ego";
    case Role::kObject: return "object";
    case Role::kNeighbor: return "neighbor";
  }
  return "neighbor";
}

std::string to_string(Lane lane) {
  switch (lane) {
    case Lane::kMain: return "main";
    case Lane::kRamp: return "ramp";
    case Lane::kFree: return "free";
  }
  return "main";
}

Role role_from_string(const std::string& s) {
  if (s == "ego") return Role::kEgo;
  if (s == "object") return Role::kObject;
  if (s == "neighbor") return Role::kNeighbor;
  throw ConfigError("unknown role '" + s + "'");
}

Lane lane_from_string(const std::string& s) {
  if (s == "main") return Lane::kMain;
  if (s == "ramp") return Lane::kRamp;
  if (s == "free") return Lane::kFree;
  throw ConfigError("unknown lane '" + s + "'");
}

}  // namespace pcbf
