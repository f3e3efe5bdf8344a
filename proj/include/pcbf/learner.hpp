#pragma once

#include "pcbf/barrier.hpp"
#include "pcbf/controller.hpp"
#include "pcbf/dynamics.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace pcbf {

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One observed (hdot, H(h)) pair of the pair (object, neighbour).
struct BarrierSample {
  long step = 0;
  double hdot_obs = 0.0;  // m^2/s
  BarrierBasis basis;     // basis.values[0] is h

  double h() const { return basis.values.front(); }
};

/// Which state the basis of a finite-difference sample is evaluated at.
/// kCurrent pairs (h^t - h^(t-1))/dt with H(h^t); kPrevious pairs it with
/// H(h^(t-1)), the state whose safety constraint governed the transition.
enum class BasisAt { kCurrent, kPrevious };

/// Regression target. Active constraints satisfy hdot = -alpha^T H, so
/// kActiveConstraint regresses -hdot on H and recovers alpha directly;
/// kAsWritten regresses +hdot on H (recovers -alpha on real interaction data).
enum class SignConvention { kActiveConstraint, kAsWritten };

struct RidgeConfig {
  double r = 1e-8;
  int q_hypothesis = 2;
  double convergence_tol = 1e-6;
  int convergence_window = 5;
  SignConvention sign = SignConvention::kActiveConstraint;

  void validate() const;
};

struct AlphaEstimate {
  AlphaVector alpha_hat{0.0};
  std::vector<double> raw;
  std::size_t n_samples = 0;
  bool converged = false;
};

/// Finite-difference sample from two consecutive observations dt apart.
BarrierSample observe(const VehicleState& obj, const VehicleState& neighbor,
                      const VehicleState& prev_obj, const VehicleState& prev_neighbor,
                      const SafetyConfig& cfg, double dt, long step,
                      BasisAt basis_at = BasisAt::kCurrent);

/// Sample whose rate is evaluated from the discrete barrier-rate formula with
/// known inputs. Used by oracle tests and the analytic replication mode.
BarrierSample observe_analytic(const VehicleState& obj, const VehicleState& neighbor,
                               const ControlInput& u_obj, const ControlInput& u_neighbor,
                               const SafetyConfig& cfg, double dt, long step);

/// Ridge regression (H^T H + r I) alpha = H^T y over the dataset.
AlphaEstimate fit(const std::vector<BarrierSample>& samples, const RidgeConfig& cfg);

/// True iff the last convergence_window estimates agree componentwise to
/// within convergence_tol.
bool check_convergence(const std::vector<AlphaEstimate>& history, const RidgeConfig& cfg);

/// Root-mean-square componentwise error; the shorter vector is zero-padded.
double alpha_rmse(const AlphaVector& estimate, const AlphaVector& truth);

struct AdmissionFilter {
  bool enabled = true;
  /// Minimum |u_observed - u_nominal_estimate| (m/s^2) for a sample to count
  /// as an active-constraint sample.
  double accel_threshold = 1e-3;
  /// Reject samples where the observed input sits on the assumed box bounds.
  bool reject_saturated = true;
  double saturation_margin = 1e-9;
  /// With one active row the filter moves the input along the pair offset
  /// (object minus neighbour). Samples whose deviation points elsewhere were
  /// shaped by some other vehicle and are rejected. Tolerance on 1 - cos.
  bool require_alignment = true;
  double alignment_tol = 1e-6;
};

/// Identifies one prediction object's style from a growing dataset.
/// Single-owner mutable state.
class StyleLearner {
 public:
  StyleLearner(RidgeConfig ridge, AdmissionFilter filter = {});

  /// Offers a sample; returns true if it was admitted and a new estimate was
  /// fitted. observed_u is the object's acceleration over the step and
  /// nominal_u the observer's estimate of its nominal input; limits are the
  /// assumed box bounds of the object; pair_offset is x_object - x_neighbour
  /// at the start of the step (alignment is not checked without it).
  bool offer(const BarrierSample& sample, const ControlInput& observed_u,
             const ControlInput& nominal_u, const AccelLimits& limits,
             const std::optional<Vec2>& pair_offset = std::nullopt);

  /// Adds a sample unconditionally and refits.
  void add(const BarrierSample& sample);

  bool converged() const { return !history_.empty() && history_.back().converged; }
  const std::vector<BarrierSample>& samples() const { return samples_; }
  const std::vector<AlphaEstimate>& history() const { return history_; }
  std::optional<AlphaEstimate> latest() const;
  const RidgeConfig& ridge() const { return ridge_; }

 private:
  RidgeConfig ridge_;
  AdmissionFilter filter_;
  std::vector<BarrierSample> samples_;
  std::vector<AlphaEstimate> history_;
};

}  // namespace pcbf
