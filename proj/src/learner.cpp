#include "pcbf/learner.hpp"

#include <algorithm>
#include <cmath>

namespace pcbf {

void RidgeConfig::validate() const {
  if (!(r >= 0.0)) throw ConfigError("ridge: regulariser must be non-negative");
  if (q_hypothesis < 1) throw ConfigError("ridge: q_hypothesis must be at least 1");
  if (convergence_window < 2) throw ConfigError("ridge: convergence window must be >= 2");
  if (!(convergence_tol >= 0.0)) throw ConfigError("ridge: convergence tolerance must be >= 0");
}

BarrierSample observe(const VehicleState& obj, const VehicleState& neighbor,
                      const VehicleState& prev_obj, const VehicleState& prev_neighbor,
                      const SafetyConfig& cfg, double dt, long step, BasisAt basis_at) {
  const double h_now = safety_value(obj.position, neighbor.position, cfg);
  const double h_prev = safety_value(prev_obj.position, prev_neighbor.position, cfg);
  BarrierSample s;
  s.hdot_obs = (h_now - h_prev) / dt;
  if (basis_at == BasisAt::kCurrent) {
    s.step = step;
    s.basis = basis(h_now, cfg.q);
  } else {
    s.step = step - 1;
    s.basis = basis(h_prev, cfg.q);
  }
  return s;
}

BarrierSample observe_analytic(const VehicleState& obj, const VehicleState& neighbor,
                               const ControlInput& u_obj, const ControlInput& u_neighbor,
                               const SafetyConfig& cfg, double dt, long step) {
  BarrierSample s;
  s.step = step;
  s.hdot_obs = hdot(obj.position, neighbor.position, obj.velocity, neighbor.velocity,
                    u_obj.acceleration, u_neighbor.acceleration, dt);
  s.basis = basis(safety_value(obj.position, neighbor.position, cfg), cfg.q);
  return s;
}

AlphaEstimate fit(const std::vector<BarrierSample>& samples, const RidgeConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw InsufficientDataError("fit: empty dataset");
  const std::size_t len = samples.front().basis.size();
  const int q = cfg.q_hypothesis;
  const auto n = static_cast<Eigen::Index>(samples.size());

  Eigen::MatrixXd H(n, q);
  Eigen::VectorXd y(n);
  const double sign = cfg.sign == SignConvention::kActiveConstraint ? -1.0 : 1.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const BarrierSample& s = samples[static_cast<std::size_t>(t)];
    if (s.basis.size() != len || len == 0) {
      throw ConfigError("fit: basis length differs across the dataset");
    }
    const BarrierBasis b = basis(s.h(), q);
    for (int p = 0; p < q; ++p) H(t, p) = b.values[static_cast<std::size_t>(p)];
    y(t) = sign * s.hdot_obs;
  }

  Eigen::MatrixXd normal = H.transpose() * H;
  normal.diagonal().array() += cfg.r;
  const Eigen::VectorXd rhs = H.transpose() * y;

  Eigen::VectorXd coef;
  if (cfg.r > 0.0) {
    coef = normal.ldlt().solve(rhs);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (lu.rank() < q) {
      throw RankDeficiencyError("fit: normal matrix is singular with r = 0; use r > 0 or more "
                                "samples at distinct h");
    }
    coef = lu.solve(rhs);
  }

  AlphaEstimate est;
  est.raw.assign(coef.data(), coef.data() + coef.size());
  std::vector<double> clamped(est.raw.size());
  std::transform(est.raw.begin(), est.raw.end(), clamped.begin(),
                 [](double c) { return std::max(c, 0.0); });
  est.alpha_hat = AlphaVector(std::move(clamped));
  est.n_samples = samples.size();
  return est;
}

bool check_convergence(const std::vector<AlphaEstimate>& history, const RidgeConfig& cfg) {
  const auto window = static_cast<std::size_t>(cfg.convergence_window);
  if (window < 2 || history.size() < window) return false;
  const std::size_t first = history.size() - window;
  const std::size_t q = history.back().alpha_hat.size();
  for (std::size_t p = 0; p < q; ++p) {
    double lo = history.back().alpha_hat[p];
    double hi = lo;
    for (std::size_t t = first; t < history.size(); ++t) {
      if (history[t].alpha_hat.size() != q) return false;
      lo = std::min(lo, history[t].alpha_hat[p]);
      hi = std::max(hi, history[t].alpha_hat[p]);
    }
    if (hi - lo > cfg.convergence_tol) return false;
  }
  return true;
}

double alpha_rmse(const AlphaVector& estimate, const AlphaVector& truth) {
  const std::size_t q = std::max(estimate.size(), truth.size());
  const AlphaVector e = estimate.padded(q);
  const AlphaVector t = truth.padded(q);
  double sum = 0.0;
  for (std::size_t p = 0; p < q; ++p) sum += (e[p] - t[p]) * (e[p] - t[p]);
  return std::sqrt(sum / static_cast<double>(q));
}

StyleLearner::StyleLearner(RidgeConfig ridge, AdmissionFilter filter)
    : ridge_(ridge), filter_(filter) {
  ridge_.validate();
}

bool StyleLearner::offer(const BarrierSample& sample, const ControlInput& observed_u,
                         const ControlInput& nominal_u, const AccelLimits& limits,
                         const std::optional<Vec2>& pair_offset) {
  if (filter_.enabled) {
    const Vec2& u = observed_u.acceleration;
    const Vec2 dev = u - nominal_u.acceleration;
    if (dev.norm() <= filter_.accel_threshold) return false;
    if (filter_.require_alignment && pair_offset && pair_offset->norm() > 0.0) {
      const double c = dev.dot(*pair_offset) / (dev.norm() * pair_offset->norm());
      if (1.0 - c > filter_.alignment_tol) return false;
    }
    if (filter_.reject_saturated) {
      const double m = filter_.saturation_margin;
      if (((u - limits.u_min).array() <= m).any() || ((limits.u_max - u).array() <= m).any()) {
        return false;
      }
    }
  }
  add(sample);
  return true;
}

void StyleLearner::add(const BarrierSample& sample) {
  samples_.push_back(sample);
  AlphaEstimate est;
  try {
    est = fit(samples_, ridge_);
  } catch (const RankDeficiencyError&) {
    return;
  }
  history_.push_back(est);
  history_.back().converged = check_convergence(history_, ridge_);
}

std::optional<AlphaEstimate> StyleLearner::latest() const {
  if (history_.empty()) return std::nullopt;
  return history_.back();
}

}  // namespace pcbf
