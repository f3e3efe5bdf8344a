#include "pcbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcbf {

namespace {

constexpr int kMaxIterations = 64;
// Unit normals whose residual after projection falls below this are treated
// as linearly dependent on the active set.
constexpr double kDependenceTol = 1e-7;

struct ActiveSetResult {
  bool feasible = false;
  Vec2 u = Vec2::Zero();
  std::vector<int> active;
  std::vector<double> lambda;
  int iterations = 0;
};

double violation_tol(const LinearRow& row, const Vec2& u_nominal) {
  return 1e-13 * std::max({1.0, u_nominal.norm(), std::abs(row.b)});
}

// Rows must have unit-norm normals (zero rows are handled by the caller).
ActiveSetResult dual_active_set(const std::vector<LinearRow>& rows, const Vec2& u_nominal) {
  ActiveSetResult res;
  res.u = u_nominal;
  std::vector<int>& act = res.active;
  std::vector<double>& lam = res.lambda;

  while (res.iterations < kMaxIterations) {
    // Most violated row.
    int p = -1;
    double worst = 0.0;
    for (int k = 0; k < static_cast<int>(rows.size()); ++k) {
      if (std::find(act.begin(), act.end(), k) != act.end()) continue;
      const double s = rows[k].a.dot(res.u) - rows[k].b;
      if (s > violation_tol(rows[k], u_nominal) && s > worst) {
        worst = s;
        p = k;
      }
    }
    if (!res.u.allFinite()) return res;
    if (p < 0) {
      res.feasible = true;
      return res;
    }

    double lambda_p = 0.0;
    // Raise the multiplier of p until it is satisfied, dropping active rows
    // whose multiplier would turn negative on the way.
    while (true) {
      ++res.iterations;
      if (res.iterations > kMaxIterations) return res;

      const Vec2& ap = rows[p].a;
      const int m = static_cast<int>(act.size());
      Eigen::Matrix<double, 2, Eigen::Dynamic> N(2, m);
      for (int i = 0; i < m; ++i) N.col(i) = rows[act[i]].a;

      Vec2 z = ap;
      Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
      if (m > 0) {
        r = N.colPivHouseholderQr().solve(ap);
        z = ap - N * r;
      }
      if (z.norm() < kDependenceTol) z.setZero();

      const double slack = ap.dot(res.u) - rows[p].b;
      double t_full = std::numeric_limits<double>::infinity();
      if (!z.isZero()) t_full = slack / ap.dot(z);

      double t_part = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (int i = 0; i < m; ++i) {
        if (r[i] > 1e-14) {
          const double t = lam[i] / r[i];
          if (t < t_part) {
            t_part = t;
            drop = i;
          }
        }
      }

      if (z.isZero() && drop < 0) return res;  // infeasible

      const double t = std::min(t_full, t_part);
      if (!std::isfinite(t)) return res;
      res.u -= t * z;
      for (int i = 0; i < m; ++i) lam[i] -= t * r[i];
      lambda_p += t;

      if (t_full <= t_part) {
        act.push_back(p);
        lam.push_back(lambda_p);
        break;
      }
      act.erase(act.begin() + drop);
      lam.erase(lam.begin() + drop);
    }
  }
  return res;
}

struct NormalizedRows {
  std::vector<LinearRow> rows;
  std::vector<int> origin;     // index into the full row list
  std::vector<double> scale;   // |a| of the original row
  bool trivially_infeasible = false;
};

NormalizedRows normalize(const std::vector<LinearRow>& full) {
  NormalizedRows out;
  for (int k = 0; k < static_cast<int>(full.size()); ++k) {
    const double n = full[k].a.norm();
    if (n < 1e-300) {
      if (full[k].b < 0.0) out.trivially_infeasible = true;
      continue;
    }
    out.rows.push_back({full[k].a / n, full[k].b / n});
    out.origin.push_back(k);
    out.scale.push_back(n);
  }
  return out;
}

Vec2 clamp_box(const Vec2& u, const QpProblem& qp) {
  return u.cwiseMax(qp.u_min).cwiseMin(qp.u_max);
}

double max_row_violation(const std::vector<LinearRow>& rows, const Vec2& u) {
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.a.dot(u) - r.b);
  return worst;
}

QpSolution finish(const QpProblem& qp, const NormalizedRows& nr, const ActiveSetResult& as,
                  bool feasible) {
  QpSolution sol;
  sol.u = as.u;
  sol.feasible = feasible;
  sol.iterations = as.iterations;
  for (std::size_t i = 0; i < as.active.size(); ++i) {
    const int k = as.active[i];
    sol.active.push_back(nr.origin[k]);
    sol.multipliers.push_back(as.lambda[i] / nr.scale[k]);
  }
  sol.max_violation = feasible ? 0.0 : max_row_violation(qp.constraints, sol.u);
  return sol;
}

}  // namespace

void QpProblem::validate() const {
  if (!u_nominal.allFinite()) throw ConfigError("qp: non-finite nominal input");
  if (!(u_min.array() <= u_max.array()).all()) throw ConfigError("qp: empty box bounds");
  for (const auto& r : constraints) {
    if (!r.a.allFinite() || !std::isfinite(r.b)) throw ConfigError("qp: non-finite constraint row");
  }
}

std::vector<LinearRow> all_rows(const QpProblem& qp) {
  std::vector<LinearRow> rows = qp.constraints;
  rows.push_back({Vec2(1.0, 0.0), qp.u_max.x()});
  rows.push_back({Vec2(0.0, 1.0), qp.u_max.y()});
  rows.push_back({Vec2(-1.0, 0.0), -qp.u_min.x()});
  rows.push_back({Vec2(0.0, -1.0), -qp.u_min.y()});
  return rows;
}

QpSolution solve_qp(const QpProblem& qp) {
  qp.validate();
  const std::vector<LinearRow> full = all_rows(qp);
  NormalizedRows nr = normalize(full);
  if (!nr.trivially_infeasible) {
    const ActiveSetResult as = dual_active_set(nr.rows, qp.u_nominal);
    if (as.feasible) return finish(qp, nr, as, true);
  }

  // Infeasible: find the smallest uniform relaxation t of the user rows that
  // admits a point in the box, then return the closest such point to u_nominal.
  const Vec2 clamped = clamp_box(qp.u_nominal, qp);
  double hi = max_row_violation(qp.constraints, clamped);
  double lo = 0.0;
  auto relaxed = [&](double t) {
    QpProblem r = qp;
    for (auto& row : r.constraints) row.b += t;
    return r;
  };
  auto solve_relaxed = [&](double t) {
    const QpProblem r = relaxed(t);
    NormalizedRows rn = normalize(all_rows(r));
    ActiveSetResult as;
    if (!rn.trivially_infeasible) as = dual_active_set(rn.rows, r.u_nominal);
    return std::pair{std::move(rn), std::move(as)};
  };
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (solve_relaxed(mid).second.feasible) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  auto [rn, as] = solve_relaxed(hi);
  if (!as.feasible) {
    // Numerical edge: fall back to the clamped nominal, which is feasible for hi
    // by construction.
    as.u = clamped;
    as.active.clear();
    as.lambda.clear();
  }
  QpSolution sol = finish(qp, rn, as, false);
  return sol;
}

double kkt_residual(const QpProblem& qp, const QpSolution& sol) {
  const std::vector<LinearRow> rows = all_rows(qp);
  Vec2 grad = sol.u - qp.u_nominal;
  double res = 0.0;
  for (std::size_t i = 0; i < sol.active.size(); ++i) {
    const LinearRow& r = rows[sol.active[i]];
    grad += sol.multipliers[i] * r.a;
    res = std::max(res, -sol.multipliers[i]);
    res = std::max(res, std::abs(sol.multipliers[i] * (r.a.dot(sol.u) - r.b)));
  }
  res = std::max(res, grad.lpNorm<Eigen::Infinity>());
  for (const auto& r : rows) res = std::max(res, r.a.dot(sol.u) - r.b);
  return res;
}

}  // namespace pcbf
