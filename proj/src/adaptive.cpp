#include "pcbf/adaptive.hpp"

#include <algorithm>
#include <cmath>

namespace pcbf {

LinearRow compatibility_constraint(const VehicleState& ego, const VehicleState& other,
                                   const AlphaVector& alpha_i, const AlphaVector& alpha_j,
                                   const SafetyConfig& cfg, double dt) {
  const Vec2 dx = ego.position - other.position;
  if (dx.isZero(0.0)) {
    throw DegenerateConstraintError("compatibility constraint: coincident vehicle positions");
  }
  const std::size_t q = std::max(alpha_i.size(), alpha_j.size());
  const AlphaVector ai = alpha_i.padded(q);
  const AlphaVector aj = alpha_j.padded(q);
  const double h = safety_value(ego.position, other.position, cfg);
  const BarrierBasis H = basis(h, static_cast<int>(q));
  LinearRow row;
  row.a = -2.0 * dt * dx;
  row.b = kappa(ai, H) - kappa(aj, H);
  return row;
}

double aggressiveness_score(const AlphaVector& alpha, double reference_h) {
  if (!(reference_h > 0.0)) throw ConfigError("aggressiveness score: reference_h must be > 0");
  return kappa(alpha, reference_h);
}

void StylePolicy::validate() const {
  if (presets.empty()) throw ConfigError("style policy: no presets");
  if (!(reference_h > 0.0) || !std::isfinite(reference_h)) {
    throw ConfigError("style policy: reference_h must be positive");
  }
  const std::vector<double> s = scores();
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (!(s[k] > s[k - 1])) {
      throw ConfigError("style policy: preset " + std::to_string(k) +
                        " is not strictly more aggressive than its predecessor");
    }
  }
}

std::vector<double> StylePolicy::scores() const {
  std::vector<double> s;
  s.reserve(presets.size());
  for (const auto& p : presets) s.push_back(aggressiveness_score(p, reference_h));
  return s;
}

StylePolicy StylePolicy::standard() {
  StylePolicy p;
  p.presets = {AlphaVector{0.25, 0.0}, AlphaVector{0.5, 0.0}, AlphaVector{1.0, 0.0},
               AlphaVector{2.0, 0.0}, AlphaVector{4.0, 0.0}};
  return p;
}

std::size_t select_index(const AlphaVector& alpha_j_hat, const StylePolicy& policy) {
  policy.validate();
  const std::vector<double> s = policy.scores();
  const double target = aggressiveness_score(alpha_j_hat, policy.reference_h);
  std::size_t rank = 0;
  double best = std::abs(s[0] - target);
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double d = std::abs(s[k] - target);
    if (d <= best) {  // ties go to the higher rank
      best = d;
      rank = k;
    }
  }
  return s.size() - 1 - rank;
}

AlphaVector select_alpha(const AlphaVector& alpha_j_hat, const StylePolicy& policy) {
  return policy.presets[select_index(alpha_j_hat, policy)];
}

void AdaptiveOptions::validate(long horizon) const {
  if (phase_budget < 1) throw ConfigError("adaptive: phase budget must be at least one step");
  if (phase_budget > horizon) throw ConfigError("adaptive: phase budget exceeds the horizon");
}

Algorithm1Result run_algorithm1(const ScenarioConfig& scenario, const StylePolicy& policy,
                                const RidgeConfig& ridge, const AdaptiveOptions& options) {
  scenario.validate();
  policy.validate();
  ridge.validate();
  options.validate(scenario.horizon);

  const auto ego = scenario.find_role(Role::kEgo);
  const auto obj = scenario.find_role(Role::kObject);
  const auto nb = scenario.find_role(Role::kNeighbor);
  if (!ego || !obj || !nb) {
    throw ConfigError("adaptive: scenario needs an ego, an object and a neighbor vehicle");
  }
  const std::size_t i = *ego, j = *obj, k = *nb;
  const double dt = scenario.dt;

  Simulation sim(scenario);
  StyleLearner learner(ridge, options.filter);
  const SafetyConfig learn_cfg{scenario.r_safe, ridge.q_hypothesis};

  Algorithm1Result out;
  out.ego_alpha = scenario.vehicles[i].alpha;
  std::optional<AlphaVector> compat_alpha_j;
  sim.set_extra_rows(i, [&](long, std::span<const VehicleState> states) {
    std::vector<LinearRow> rows;
    if (compat_alpha_j) {
      const SafetyConfig c{scenario.r_safe, 1};
      rows.push_back(compatibility_constraint(states[i], states[j], sim.alpha(i), *compat_alpha_j,
                                              c, dt));
    }
    return rows;
  });

  for (long t = 0; t < scenario.horizon; ++t) {
    if (t == options.phase_budget && options.prediction_enabled) {
      if (const auto est = learner.latest()) {
        out.ego_alpha = select_alpha(est->alpha_hat, policy);
        sim.set_alpha(i, out.ego_alpha);
        if (options.enforce_compatibility && learner.converged()) {
          compat_alpha_j = est->alpha_hat;
          out.compatibility_enforced = true;
        }
      }
    }

    const VehicleState prev_j = sim.states()[j];
    const VehicleState prev_k = sim.states()[k];
    const StepRecord& rec = sim.advance();

    if (!options.prediction_enabled || t >= options.phase_budget || learner.converged()) continue;

    const VehicleState& now_j = sim.states()[j];
    const VehicleState& now_k = sim.states()[k];
    BarrierSample sample;
    ControlInput observed_u;
    if (options.hdot_source == HdotSource::kAnalytic) {
      sample = observe_analytic(prev_j, prev_k, rec.inputs[j], rec.inputs[k], learn_cfg, dt, t);
      observed_u = rec.inputs[j];
    } else {
      sample = observe(now_j, now_k, prev_j, prev_k, learn_cfg, dt, t + 1, options.basis_at);
      observed_u.acceleration = (now_j.velocity - prev_j.velocity) / dt;
    }
    const VehicleSpec& spec_j = scenario.vehicles[j];
    const ControlInput nominal_j = nominal_control(prev_j, sim.plan_for(j, prev_j), spec_j.limits);
    const std::size_t before = learner.history().size();
    learner.offer(sample, observed_u, nominal_j, spec_j.limits,
                  Vec2(prev_j.position - prev_k.position));
    if (learner.history().size() > before && learner.converged() && out.converged_step < 0) {
      out.converged_step = t + 1;
    }
  }
  sim.record_final();

  out.estimate = learner.latest();
  out.history = learner.history();
  out.samples = learner.samples();
  out.converged = learner.converged();
  out.trial.log = sim.trajectory();
  out.trial.metrics = compute_metrics(scenario, out.trial.log);
  return out;
}

}  // namespace pcbf
