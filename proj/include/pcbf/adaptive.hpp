#pragma once

#include "pcbf/barrier.hpp"
#include "pcbf/controller.hpp"
#include "pcbf/learner.hpp"
#include "pcbf/scenario.hpp"

#include <optional>
#include <vector>

namespace pcbf {

/// Row a^T u_i <= b encoding the pairwise compatibility condition
///   2 dx^T u_i dt + (alpha_i - alpha_j)^T H(h) >= 0,   dx = x_i - x_j.
/// If j keeps its own safety row (assuming i holds its velocity) and i keeps
/// this row, the pair's rate satisfies hdot >= -kappa(alpha_i, h) whatever i
/// actually does. The shorter alpha is zero-padded.
LinearRow compatibility_constraint(const VehicleState& ego, const VehicleState& other,
                                   const AlphaVector& alpha_i, const AlphaVector& alpha_j,
                                   const SafetyConfig& cfg, double dt);

/// kappa(alpha, reference_h). Larger means the style tolerates faster approach.
double aggressiveness_score(const AlphaVector& alpha, double reference_h);

/// Ego styles ordered from conservative to aggressive.
struct StylePolicy {
  std::vector<AlphaVector> presets;
  double reference_h = 25.0;  // m^2, r_safe^2 for the default 5 m radius

  /// Presets non-empty, reference_h > 0 and scores strictly increasing.
  void validate() const;
  std::vector<double> scores() const;

  static StylePolicy standard();
};

/// Complementary matching: the estimate's score is ranked against the preset
/// scores (nearest preset; on an exact tie between two presets the more
/// aggressive rank wins, which hands the ego the more conservative style) and
/// the preset at the mirrored rank is returned.
std::size_t select_index(const AlphaVector& alpha_j_hat, const StylePolicy& policy);
AlphaVector select_alpha(const AlphaVector& alpha_j_hat, const StylePolicy& policy);

enum class HdotSource { kFiniteDifference, kAnalytic };

struct AdaptiveOptions {
  bool prediction_enabled = true;
  long phase_budget = 300;           // steps of observation before the ego adapts
  bool enforce_compatibility = true; // hard compatibility row once converged
  HdotSource hdot_source = HdotSource::kFiniteDifference;
  BasisAt basis_at = BasisAt::kPrevious;
  AdmissionFilter filter;

  void validate(long horizon) const;
};

struct Algorithm1Result {
  std::optional<AlphaEstimate> estimate;  // empty if no fit was ever possible
  std::vector<AlphaEstimate> history;
  std::vector<BarrierSample> samples;
  bool converged = false;       // learner converged within the phase budget
  long converged_step = -1;     // step of the first converged estimate
  AlphaVector ego_alpha{1.0};   // style the ego used in phase 2
  bool compatibility_enforced = false;
  TrialResult trial;
};

/// Two-phase loop. Phase 1 (steps [0, phase_budget)): the ego drives with its
/// configured style while learning the object's style from the object's
/// interaction with the neighbour. Phase 2: the ego switches to
/// select_alpha(estimate) and, when the estimate converged and
/// enforce_compatibility is set, adds the compatibility row against the
/// object. With prediction disabled the ego keeps its configured style.
Algorithm1Result run_algorithm1(const ScenarioConfig& scenario, const StylePolicy& policy,
                                const RidgeConfig& ridge, const AdaptiveOptions& options = {});

}  // namespace pcbf
