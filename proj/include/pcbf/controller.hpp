#pragma once

#include "pcbf/barrier.hpp"
#include "pcbf/dynamics.hpp"
#include "pcbf/qp.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace pcbf {

/// The pair is at coincident positions; no safety row can be formed there.
class DegenerateConstraintError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Proportional cruise law toward desired_speed * lane_direction.
struct NominalPlan {
  double desired_speed = 10.0;           // m/s
  Vec2 lane_direction = Vec2::UnitX();   // unit vector
  double gain = 0.5;                     // 1/s

  void validate() const;
};

struct AccelLimits {
  Vec2 u_min = Vec2::Constant(-5.0);
  Vec2 u_max = Vec2::Constant(5.0);

  void validate() const;
};

/// A neighbour as seen by the ego: its sensed state and the acceleration the
/// ego assumes it applies during the step (zero for constant velocity).
struct Neighbor {
  VehicleState state;
  ControlInput assumed_u;
};

ControlInput nominal_control(const VehicleState& state, const NominalPlan& plan,
                             const AccelLimits& limits);

/// Row a^T u_ego <= b equivalent to
///   2 dx^T dv + 2 dx^T u_ego dt - 2 dx^T u_other dt >= -kappa(alpha, h),
/// with dx = x_ego - x_other and dv = v_ego - v_other.
LinearRow build_safety_constraint(const VehicleState& ego, const VehicleState& other,
                                  const ControlInput& other_u_assumed, const AlphaVector& alpha,
                                  const SafetyConfig& cfg, double dt);

/// Safety-filter QP for one ego vehicle: one row per neighbour plus any
/// caller-supplied rows.
QpProblem build_safety_qp(const VehicleState& ego, std::span<const Neighbor> others,
                          const AlphaVector& alpha, const NominalPlan& plan,
                          const SafetyConfig& cfg, const AccelLimits& limits, double dt,
                          std::span<const LinearRow> extra_rows = {});

struct SafeControl {
  ControlInput u;
  ControlInput nominal;
  bool infeasible = false;
  double max_violation = 0.0;
};

SafeControl safe_control(const VehicleState& ego, std::span<const Neighbor> others,
                         const AlphaVector& alpha, const NominalPlan& plan,
                         const SafetyConfig& cfg, const AccelLimits& limits, double dt,
                         std::span<const LinearRow> extra_rows = {});

}  // namespace pcbf
