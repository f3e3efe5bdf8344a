#include "pcbf/controller.hpp"

#include <cmath>

namespace pcbf {

void NominalPlan::validate() const {
  if (!std::isfinite(desired_speed)) throw ConfigError("plan: non-finite desired speed");
  if (!(gain > 0.0)) throw ConfigError("plan: gain must be positive");
  if (std::abs(lane_direction.norm() - 1.0) > 1e-9) {
    throw ConfigError("plan: lane direction must be a unit vector");
  }
}

void AccelLimits::validate() const {
  if (!u_min.allFinite() || !u_max.allFinite()) throw ConfigError("limits: non-finite bound");
  if (!(u_min.array() <= u_max.array()).all()) throw ConfigError("limits: u_min > u_max");
}

ControlInput nominal_control(const VehicleState& state, const NominalPlan& plan,
                             const AccelLimits& limits) {
  const Vec2 u = plan.gain * (plan.desired_speed * plan.lane_direction - state.velocity);
  return {u.cwiseMax(limits.u_min).cwiseMin(limits.u_max)};
}

LinearRow build_safety_constraint(const VehicleState& ego, const VehicleState& other,
                                  const ControlInput& other_u_assumed, const AlphaVector& alpha,
                                  const SafetyConfig& cfg, double dt) {
  const Vec2 dx = ego.position - other.position;
  if (dx.isZero(0.0)) {
    throw DegenerateConstraintError("safety constraint: coincident vehicle positions");
  }
  const Vec2 dv = ego.velocity - other.velocity;
  const double h = safety_value(ego.position, other.position, cfg);
  LinearRow row;
  row.a = -2.0 * dt * dx;
  row.b = 2.0 * dx.dot(dv) - 2.0 * dx.dot(other_u_assumed.acceleration) * dt + kappa(alpha, h);
  return row;
}

QpProblem build_safety_qp(const VehicleState& ego, std::span<const Neighbor> others,
                          const AlphaVector& alpha, const NominalPlan& plan,
                          const SafetyConfig& cfg, const AccelLimits& limits, double dt,
                          std::span<const LinearRow> extra_rows) {
  QpProblem qp;
  qp.u_nominal = nominal_control(ego, plan, limits).acceleration;
  qp.u_min = limits.u_min;
  qp.u_max = limits.u_max;
  qp.constraints.reserve(others.size() + extra_rows.size());
  for (const auto& n : others) {
    if (!n.state.position.allFinite() || !n.state.velocity.allFinite()) {
      throw std::domain_error("safe_control: non-finite neighbour state");
    }
    qp.constraints.push_back(build_safety_constraint(ego, n.state, n.assumed_u, alpha, cfg, dt));
  }
  qp.constraints.insert(qp.constraints.end(), extra_rows.begin(), extra_rows.end());
  return qp;
}

SafeControl safe_control(const VehicleState& ego, std::span<const Neighbor> others,
                         const AlphaVector& alpha, const NominalPlan& plan,
                         const SafetyConfig& cfg, const AccelLimits& limits, double dt,
                         std::span<const LinearRow> extra_rows) {
  const QpProblem qp = build_safety_qp(ego, others, alpha, plan, cfg, limits, dt, extra_rows);
  const QpSolution sol = solve_qp(qp);
  return {{sol.u}, {qp.u_nominal}, !sol.feasible, sol.max_violation};
}

}  // namespace pcbf
