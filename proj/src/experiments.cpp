#include "pcbf/experiments.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace pcbf {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

long uniform_int(Rng& rng, long lo, long hi) {
  return std::uniform_int_distribution<long>(lo, hi)(rng);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_range(double lo, double hi, const std::string& name) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, name + ": empty or non-finite range");
}

}  // namespace

Rng trial_rng(std::uint64_t seed, std::size_t trial) {
  return Rng(seed + static_cast<std::uint64_t>(trial));
}

AlphaVector sample_style(Rng& rng, int q, std::size_t trial, double alpha_max) {
  if (q < 1) throw ConfigError("sample_style: q must be at least 1");
  if (!(alpha_max > 0.0)) throw ConfigError("sample_style: alpha_max must be positive");
  std::vector<double> c(static_cast<std::size_t>(q));
  for (double& v : c) v = uniform(rng, 0.0, alpha_max);
  if (trial % 3 == 2) {
    const std::size_t keep = (trial / 3) % c.size();
    for (std::size_t p = 0; p < c.size(); ++p) {
      if (p != keep) c[p] = 0.0;
    }
  }
  return AlphaVector(std::move(c));
}

// ---------------------------------------------------------------- prediction

void PredictionSettings::validate() const {
  require(trials >= 1, "predict: trials must be at least 1");
  require(q >= 1, "predict: q must be at least 1");
  require(alpha_max > 0.0, "predict: alpha_max must be positive");
  check_range(speed_min, speed_max, "predict: speed");
  check_range(closing_min, closing_max, "predict: closing speed");
  check_range(gap_min, gap_max, "predict: gap");
  require(speed_min > 0.0 && closing_min > 0.0, "predict: speeds must be positive");
  require(gap_min > r_safe, "predict: initial gap must exceed r_safe");
  require(horizon >= 1, "predict: horizon must be at least 1");
  require(dt > 0.0, "predict: dt must be positive");
  ridge.validate();
}

PredictionTrial prediction_trial(const PredictionSettings& s, std::uint64_t seed,
                                 std::size_t trial) {
  Rng rng = trial_rng(seed, trial);
  PredictionTrial out;
  out.trial = trial;
  out.truth = sample_style(rng, s.q, trial, s.alpha_max);
  const double v_lead = uniform(rng, s.speed_min, s.speed_max);
  const double v_obj = v_lead + uniform(rng, s.closing_min, s.closing_max);
  const double gap = uniform(rng, s.gap_min, s.gap_max);

  ScenarioConfig cfg;
  cfg.name = "predict";
  cfg.dt = s.dt;
  cfg.horizon = s.horizon;
  cfg.r_safe = s.r_safe;
  cfg.seed = seed;
  const double x0 = cfg.road.main_road.start.x() + 50.0;

  VehicleSpec obj;
  obj.id = "object";
  obj.role = Role::kObject;
  obj.lane = Lane::kMain;
  obj.initial = {Vec2(x0, 0.0), Vec2(v_obj, 0.0)};
  obj.alpha = out.truth;
  obj.desired_speed = v_obj;

  VehicleSpec lead;
  lead.id = "neighbor";
  lead.role = Role::kNeighbor;
  lead.lane = Lane::kMain;
  lead.initial = {Vec2(x0 + gap, 0.0), Vec2(v_lead, 0.0)};
  lead.desired_speed = v_lead;
  lead.safety_filter = false;

  cfg.vehicles = {obj, lead};
  cfg.validate();

  Simulation sim(cfg);
  StyleLearner learner(s.ridge, s.filter);
  const SafetyConfig learn_cfg{cfg.r_safe, s.ridge.q_hypothesis};
  for (long t = 0; t < cfg.horizon; ++t) {
    const VehicleState prev_j = sim.states()[0];
    const VehicleState prev_k = sim.states()[1];
    const StepRecord& rec = sim.advance();
    BarrierSample sample;
    ControlInput observed;
    if (s.hdot_source == HdotSource::kAnalytic) {
      sample = observe_analytic(prev_j, prev_k, rec.inputs[0], rec.inputs[1], learn_cfg, cfg.dt, t);
      observed = rec.inputs[0];
    } else {
      const VehicleState& now_j = sim.states()[0];
      sample = observe(now_j, sim.states()[1], prev_j, prev_k, learn_cfg, cfg.dt, t + 1,
                       s.basis_at);
      observed.acceleration = (now_j.velocity - prev_j.velocity) / cfg.dt;
    }
    const ControlInput nominal = nominal_control(prev_j, sim.plan_for(0, prev_j), obj.limits);
    const bool was_converged = learner.converged();
    if (learner.offer(sample, observed, nominal, obj.limits,
                      Vec2(prev_j.position - prev_k.position)) &&
        !was_converged &&
        learner.converged()) {
      out.convergence_samples = static_cast<long>(learner.samples().size());
      out.convergence_step = sample.step;
    }
  }
  sim.record_final();

  out.estimate = learner.latest();
  out.converged = out.convergence_samples >= 0;
  out.rmse = out.estimate ? alpha_rmse(out.estimate->alpha_hat, out.truth)
                          : std::numeric_limits<double>::quiet_NaN();
  out.history = learner.history();
  out.samples = learner.samples();
  out.log = sim.trajectory();
  return out;
}

PredictionSummary experiment_prediction(const PredictionSettings& s, std::uint64_t seed) {
  s.validate();
  PredictionSummary out;
  out.trials = parallel_trials<PredictionTrial>(
      s.trials, s.threads, [&](std::size_t t) { return prediction_trial(s, seed, t); });
  double sum = 0.0;
  for (const auto& t : out.trials) {
    sum += t.rmse;  // NaN propagates: a trial without any fit fails the summary
    out.max_rmse = std::max(out.max_rmse, t.rmse);
    if (std::isnan(t.rmse)) out.max_rmse = t.rmse;
    if (t.converged) ++out.converged_trials;
  }
  out.mean_rmse = sum / static_cast<double>(out.trials.size());
  return out;
}

// --------------------------------------------------------------------- sweep

std::string to_string(MergeOrder order) {
  switch (order) {
    case MergeOrder::kFront: return "front";
    case MergeOrder::kBehind: return "behind";
    case MergeOrder::kUndecided: return "undecided";
  }
  return "undecided";
}

void SweepSettings::validate() const {
  scenario.validate();
  require(scenario.find_role(Role::kEgo).has_value(), "sweep: scenario needs an ego vehicle");
  require(scenario.find_role(Role::kObject).has_value(), "sweep: scenario needs an object vehicle");
  require(!styles.empty(), "sweep: no styles");
}

std::vector<SweepRun> experiment_behavior_sweep(const SweepSettings& s) {
  s.validate();
  const std::size_t ego = *s.scenario.find_role(Role::kEgo);
  const std::size_t obj = *s.scenario.find_role(Role::kObject);
  return parallel_trials<SweepRun>(s.styles.size(), s.threads, [&](std::size_t k) {
    ScenarioConfig cfg = s.scenario;
    cfg.vehicles[ego].alpha = s.styles[k];
    cfg.validate();
    SweepRun run;
    run.style = s.styles[k];
    run.trial = run_trial(cfg);
    run.distance = distance_series(run.trial.log, static_cast<int>(ego), static_cast<int>(obj));
    run.min_distance = *std::min_element(run.distance.begin(), run.distance.end());
    const long me = run.trial.metrics.merge_step[ego];
    const long mo = run.trial.metrics.merge_step[obj];
    if (me >= 0 && mo >= 0 && me != mo) {
      run.order = me < mo ? MergeOrder::kFront : MergeOrder::kBehind;
    } else if (me >= 0 && mo < 0) {
      run.order = MergeOrder::kFront;
    } else if (mo >= 0 && me < 0) {
      run.order = MergeOrder::kBehind;
    }
    return run;
  });
}

// ------------------------------------------------------------------ adaptive

void AdaptiveSettings::validate() const {
  scenario.validate();
  policy.validate();
  ridge.validate();
  options.validate(scenario.horizon);
  require(jitter >= 0.0 && std::isfinite(jitter), "adaptive: jitter must be non-negative");
}

PairedComparison experiment_prediction_in_loop(const AdaptiveSettings& s, std::uint64_t seed) {
  s.validate();
  PairedComparison out;
  out.scenario = s.scenario;
  out.scenario.seed = seed;
  if (s.jitter > 0.0) {
    Rng rng = trial_rng(seed, 0);
    for (auto& v : out.scenario.vehicles) {
      const Vec2 dir = v.initial.velocity.norm() > 0.0 ? Vec2(v.initial.velocity.normalized())
                                                       : Vec2::UnitX();
      v.initial.position += uniform(rng, -s.jitter, s.jitter) * dir;
    }
    out.scenario.validate();
  }

  AdaptiveOptions on = s.options;
  on.prediction_enabled = true;
  AdaptiveOptions off = s.options;
  off.prediction_enabled = false;
  out.with_prediction = run_algorithm1(out.scenario, s.policy, s.ridge, on);
  out.without_prediction = run_algorithm1(out.scenario, s.policy, s.ridge, off);

  const std::size_t ego = *out.scenario.find_role(Role::kEgo);
  const TrialMetrics& a = out.with_prediction.trial.metrics;
  const TrialMetrics& b = out.without_prediction.trial.metrics;
  auto pct = [](long delta, long base) {
    return base > 0 ? 100.0 * static_cast<double>(delta) / static_cast<double>(base)
                    : std::numeric_limits<double>::quiet_NaN();
  };
  if (a.merge_step[ego] >= 0 && b.merge_step[ego] >= 0) {
    out.ego_merge_delta = a.merge_step[ego] - b.merge_step[ego];
    out.ego_merge_pct = pct(out.ego_merge_delta, b.merge_step[ego]);
  } else {
    out.ego_merge_pct = std::numeric_limits<double>::quiet_NaN();
  }
  if (a.overall_completion() >= 0 && b.overall_completion() >= 0) {
    out.overall_delta = a.overall_completion() - b.overall_completion();
    out.overall_pct = pct(out.overall_delta, b.overall_completion());
  } else {
    out.overall_pct = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// ---------------------------------------------------------------- invariance

void InvarianceSettings::validate() const {
  require(trials >= 1, "invariance: trials must be at least 1");
  check_range(speed_min, speed_max, "invariance: speed");
  require(speed_min > 0.0, "invariance: speeds must be positive");
  check_range(arrival_min, arrival_max, "invariance: arrival time");
  require(arrival_min > 0.0, "invariance: arrival time must be positive");
  require(offset_max >= 0.0 && offset_max < arrival_min, "invariance: offset_max out of range");
  check_range(linear_min, linear_max, "invariance: linear weight");
  require(linear_min >= 0.0 && cubic_max >= 0.0, "invariance: style weights must be >= 0");
  require(horizon >= 1, "invariance: horizon must be at least 1");
  limits.validate();
}

double InvarianceSummary::infeasible_fraction() const {
  return vehicle_steps > 0
             ? static_cast<double>(infeasible_steps) / static_cast<double>(vehicle_steps)
             : 0.0;
}

ScenarioConfig invariance_scenario(const InvarianceSettings& s, std::uint64_t seed,
                                   std::size_t trial) {
  Rng rng = trial_rng(seed, trial);
  ScenarioConfig cfg;
  cfg.name = "invariance";
  cfg.horizon = s.horizon;
  cfg.seed = seed;
  const Vec2 merge = cfg.road.merge_point;
  const Vec2 ramp_dir = cfg.road.ramp.direction();

  const double ve = uniform(rng, s.speed_min, s.speed_max);
  const double vo = uniform(rng, s.speed_min, s.speed_max);
  const double te = uniform(rng, s.arrival_min, s.arrival_max);
  const double to = te + uniform(rng, -s.offset_max, s.offset_max);
  auto style = [&] {
    const double a1 = uniform(rng, s.linear_min, s.linear_max);
    const double a2 = uniform(rng, 0.0, s.cubic_max);
    return AlphaVector{a1, a2};
  };

  VehicleSpec ego;
  ego.id = "ego";
  ego.role = Role::kEgo;
  ego.lane = Lane::kMain;
  ego.initial = {merge - Vec2(ve * te, 0.0), Vec2(ve, 0.0)};
  ego.alpha = style();
  ego.desired_speed = ve;
  ego.limits = s.limits;

  VehicleSpec obj;
  obj.id = "merger";
  obj.role = Role::kObject;
  obj.lane = Lane::kRamp;
  obj.initial = {merge - vo * to * ramp_dir, vo * ramp_dir};
  obj.alpha = style();
  obj.desired_speed = vo;
  obj.limits = s.limits;

  cfg.vehicles = {ego, obj};
  return cfg;
}

InvarianceSummary experiment_invariance(const InvarianceSettings& s, std::uint64_t seed) {
  s.validate();
  InvarianceSummary out;
  out.trials = parallel_trials<InvarianceTrial>(s.trials, s.threads, [&](std::size_t t) {
    InvarianceTrial r;
    r.trial = t;
    r.scenario = invariance_scenario(s, seed, t);
    r.scenario.validate();
    TrialResult res = run_trial(r.scenario);
    r.metrics = res.metrics;
    r.log = std::move(res.log);
    return r;
  });
  out.min_h = std::numeric_limits<double>::infinity();
  for (const auto& t : out.trials) {
    if (t.metrics.collision) ++out.collisions;
    out.infeasible_steps += t.metrics.infeasible_steps;
    out.vehicle_steps += t.metrics.vehicle_steps;
    out.min_h = std::min(out.min_h, t.metrics.min_h_overall());
  }
  return out;
}

// ------------------------------------------------------------------- stress

void StressSettings::validate() const {
  require(trials >= 1, "stress: trials must be at least 1");
  check_range(linear_min, linear_max, "stress: linear weight");
  require(linear_min >= 0.0 && cubic_max >= 0.0 && delta_max >= 0.0,
          "stress: style weights must be >= 0");
  require(accel_max >= 0.0 && accel_max <= 5.0, "stress: accel_max must lie in [0, 5]");
  require(hold_min >= 1 && hold_min <= hold_max, "stress: bad hold range");
  require(object_accel_limit > 0.0, "stress: object_accel_limit must be positive");
  check_range(speed_min, speed_max, "stress: speed");
  require(speed_min > 0.0, "stress: speeds must be positive");
  check_range(crossing_min_deg, crossing_max_deg, "stress: crossing angle");
  require(crossing_min_deg > 0.0 && crossing_max_deg < 180.0,
          "stress: crossing angle out of (0, 180)");
  require(horizon >= 1, "stress: horizon must be at least 1");
}

StressTrial stress_trial(const StressSettings& s, std::uint64_t seed, std::size_t trial) {
  Rng rng = trial_rng(seed, trial);
  StressTrial out;
  out.trial = trial;
  const double a1 = uniform(rng, s.linear_min, s.linear_max);
  const double a2 = uniform(rng, 0.0, s.cubic_max);
  out.alpha_j = AlphaVector{a1, a2};
  out.alpha_i = AlphaVector{a1 + uniform(rng, 0.0, s.delta_max),
                            a2 + uniform(rng, 0.0, s.delta_max * s.cubic_max)};

  // Two straight paths crossing at the origin; both would reach it at about
  // the same time if nobody reacted.
  const double th_i = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double th_j =
      th_i + side * uniform(rng, s.crossing_min_deg, s.crossing_max_deg) * std::numbers::pi / 180.0;
  const Vec2 dir_i(std::cos(th_i), std::sin(th_i));
  const Vec2 dir_j(std::cos(th_j), std::sin(th_j));
  const double vi = uniform(rng, s.speed_min, s.speed_max);
  const double vj = uniform(rng, s.speed_min, s.speed_max);
  const double t_meet = uniform(rng, 2.0, 5.0);
  const double t_j = t_meet + uniform(rng, -0.3, 0.3);

  ScenarioConfig cfg;
  cfg.name = "stress";
  cfg.horizon = s.horizon;
  cfg.seed = seed;
  VehicleSpec ego;
  ego.id = "ego";
  ego.role = Role::kEgo;
  ego.lane = Lane::kFree;
  ego.heading = dir_i;
  ego.initial = {-vi * t_meet * dir_i, vi * dir_i};
  ego.alpha = out.alpha_i;
  ego.desired_speed = vi;
  VehicleSpec obj;
  obj.id = "object";
  obj.role = Role::kObject;
  obj.lane = Lane::kFree;
  obj.heading = dir_j;
  obj.initial = {-vj * t_j * dir_j, vj * dir_j};
  obj.alpha = out.alpha_j;
  obj.desired_speed = vj;
  obj.limits.u_min = Vec2::Constant(-s.object_accel_limit);
  obj.limits.u_max = Vec2::Constant(s.object_accel_limit);
  cfg.vehicles = {ego, obj};
  cfg.validate();

  Simulation sim(cfg);
  Vec2 u_random = Vec2::Zero();
  long hold_left = 0;
  const SafetyConfig row_cfg{cfg.r_safe, 1};
  sim.set_control_override(0, [&](long, std::span<const VehicleState> st) {
    if (hold_left <= 0) {
      u_random = Vec2(uniform(rng, -s.accel_max, s.accel_max),
                      uniform(rng, -s.accel_max, s.accel_max));
      hold_left = uniform_int(rng, s.hold_min, s.hold_max);
    }
    --hold_left;
    const LinearRow row = compatibility_constraint(st[0], st[1], out.alpha_i, out.alpha_j,
                                                   row_cfg, cfg.dt);
    QpProblem qp;
    qp.u_nominal = u_random;
    qp.u_min = ego.limits.u_min;
    qp.u_max = ego.limits.u_max;
    qp.constraints = {row};
    const QpSolution sol = solve_qp(qp);
    if (!sol.feasible || row.a.dot(sol.u) - row.b > 1e-12 * std::max(1.0, std::abs(row.b))) {
      ++out.row_violations;
    }
    return ControlInput{sol.u};
  });
  for (long t = 0; t < cfg.horizon; ++t) {
    const StepRecord& rec = sim.advance();
    out.object_infeasible += rec.infeasible[1];
  }
  sim.record_final();
  out.min_h = compute_metrics(cfg, sim.trajectory()).min_h_overall();
  return out;
}

std::vector<StressTrial> experiment_compatibility_stress(const StressSettings& s,
                                                         std::uint64_t seed) {
  s.validate();
  return parallel_trials<StressTrial>(s.trials, s.threads,
                                      [&](std::size_t t) { return stress_trial(s, seed, t); });
}

}  // namespace pcbf
