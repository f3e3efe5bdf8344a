#pragma once

#include "pcbf/adaptive.hpp"
#include "pcbf/learner.hpp"
#include "pcbf/scenario.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pcbf {

using Rng = std::mt19937_64;

/// Per-trial generator; trial t of a run seeded s always sees the same stream.
Rng trial_rng(std::uint64_t seed, std::size_t trial);

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency) and
/// returns the results in index order. Exceptions are rethrown in the caller
/// (first failing index wins).
template <class T>
std::vector<T> parallel_trials(std::size_t n, unsigned threads,
                               const std::function<T(std::size_t)>& fn);

/// Each coefficient ~ U[0, alpha_max]. Every third trial (trial % 3 == 2)
/// keeps a single nonzero coefficient, cycling through the positions, so the
/// pure linear and pure cubic forms show up in every run.
AlphaVector sample_style(Rng& rng, int q, std::size_t trial, double alpha_max = 1.0);

// ---------------------------------------------------------------- prediction

struct PredictionSettings {
  std::size_t trials = 30;
  int q = 2;
  double alpha_max = 1.0;
  double speed_min = 8.0;    // m/s, neighbour cruise speed
  double speed_max = 12.0;
  double closing_min = 0.1;  // m/s, object speed above the neighbour
  double closing_max = 0.3;
  double gap_min = 5.5;      // m, initial centre distance
  double gap_max = 7.0;
  long horizon = 1500;
  double dt = kDefaultDt;
  double r_safe = 5.0;
  HdotSource hdot_source = HdotSource::kFiniteDifference;
  BasisAt basis_at = BasisAt::kPrevious;
  RidgeConfig ridge;
  AdmissionFilter filter;
  unsigned threads = 0;

  void validate() const;
};

struct PredictionTrial {
  std::size_t trial = 0;
  AlphaVector truth{0.0};
  std::optional<AlphaEstimate> estimate;
  double rmse = 0.0;                  // NaN when no estimate was possible
  bool converged = false;
  long convergence_samples = -1;      // admitted samples at first convergence
  long convergence_step = -1;         // simulation step of that sample
  std::vector<AlphaEstimate> history;
  std::vector<BarrierSample> samples;
  Trajectory log;
};

struct PredictionSummary {
  std::vector<PredictionTrial> trials;
  double mean_rmse = 0.0;
  double max_rmse = 0.0;
  std::size_t converged_trials = 0;
};

/// The object follows a non-reactive neighbour that cruises at constant speed
/// on the main road; the object is a little faster, so its safety constraint
/// binds and the observer fits its style from the pair's barrier rate.
PredictionTrial prediction_trial(const PredictionSettings& s, std::uint64_t seed,
                                 std::size_t trial);
PredictionSummary experiment_prediction(const PredictionSettings& s, std::uint64_t seed);

// --------------------------------------------------------------------- sweep

enum class MergeOrder { kFront, kBehind, kUndecided };
std::string to_string(MergeOrder order);

struct SweepSettings {
  ScenarioConfig scenario;          // needs an ego and an object vehicle
  std::vector<AlphaVector> styles;  // ego styles, one trial each
  unsigned threads = 0;

  void validate() const;
};

struct SweepRun {
  AlphaVector style{1.0};
  TrialResult trial;
  std::vector<double> distance;  // ego-object distance per logged step
  double min_distance = 0.0;
  MergeOrder order = MergeOrder::kUndecided;
};

std::vector<SweepRun> experiment_behavior_sweep(const SweepSettings& s);

// ------------------------------------------------------------------ adaptive

struct AdaptiveSettings {
  ScenarioConfig scenario;
  StylePolicy policy = StylePolicy::standard();
  RidgeConfig ridge;
  AdaptiveOptions options;
  double jitter = 0.0;  // m, seeded uniform perturbation of initial positions

  void validate() const;
};

struct PairedComparison {
  ScenarioConfig scenario;  // after jitter
  Algorithm1Result with_prediction;
  Algorithm1Result without_prediction;
  long ego_merge_delta = 0;      // with - without, steps
  double ego_merge_pct = 0.0;    // relative to without
  long overall_delta = 0;
  double overall_pct = 0.0;
};

PairedComparison experiment_prediction_in_loop(const AdaptiveSettings& s, std::uint64_t seed);

// ---------------------------------------------------------------- invariance

struct InvarianceSettings {
  std::size_t trials = 100;
  double speed_min = 8.0;
  double speed_max = 12.0;
  double arrival_min = 5.0;     // s, ego's unobstructed time to the merge point
  double arrival_max = 8.0;
  double offset_max = 1.0;      // s, |object arrival - ego arrival|
  double linear_min = 0.2;      // alpha_1 range
  double linear_max = 1.0;
  double cubic_max = 1e-3;      // alpha_2 range [0, cubic_max]
  long horizon = 1500;
  AccelLimits limits;
  unsigned threads = 0;

  void validate() const;
};

struct InvarianceTrial {
  std::size_t trial = 0;
  ScenarioConfig scenario;
  TrialMetrics metrics;
  Trajectory log;
};

struct InvarianceSummary {
  std::vector<InvarianceTrial> trials;
  std::size_t collisions = 0;
  long infeasible_steps = 0;
  long vehicle_steps = 0;
  double min_h = 0.0;

  double infeasible_fraction() const;
};

ScenarioConfig invariance_scenario(const InvarianceSettings& s, std::uint64_t seed,
                                   std::size_t trial);
InvarianceSummary experiment_invariance(const InvarianceSettings& s, std::uint64_t seed);

// ------------------------------------------------------------------- stress

/// Vehicle j runs its safety filter assuming the ego holds its velocity; the
/// ego instead applies random piecewise-constant accelerations, projected only
/// onto the compatibility row (plus its box). alpha_i = alpha_j + delta with
/// delta >= 0, so the row is always satisfiable. The pairwise guarantee needs
/// j's own row to be satisfiable too, hence j's generous default box: with
/// +-5 m/s^2 j saturates whenever the ego spends its slack at close range.
struct StressSettings {
  std::size_t trials = 100;
  double linear_min = 0.2;
  double linear_max = 2.0;
  double cubic_max = 1e-3;
  double delta_max = 0.5;
  double crossing_min_deg = 15.0;  // angle between the two paths
  double crossing_max_deg = 60.0;
  double accel_max = 2.0;       // m/s^2, random ego input bound per axis
  double object_accel_limit = 50.0;  // m/s^2, box of j's own filter
  long hold_min = 10;           // steps a random input is held
  long hold_max = 60;
  double speed_min = 8.0;
  double speed_max = 12.0;
  long horizon = 1000;
  unsigned threads = 0;

  void validate() const;
};

struct StressTrial {
  std::size_t trial = 0;
  AlphaVector alpha_i{0.0};
  AlphaVector alpha_j{0.0};
  double min_h = 0.0;
  long object_infeasible = 0;  // steps where j's own filter was infeasible
  long row_violations = 0;     // steps where the ego input broke the row
};

StressTrial stress_trial(const StressSettings& s, std::uint64_t seed, std::size_t trial);
std::vector<StressTrial> experiment_compatibility_stress(const StressSettings& s,
                                                         std::uint64_t seed);

}  // namespace pcbf

#include "pcbf/experiments_impl.hpp"
