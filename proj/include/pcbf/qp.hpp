#pragma once

#include "pcbf/barrier.hpp"

#include <vector>

namespace pcbf {

/// Half-plane a^T u <= b.
struct LinearRow {
  Vec2 a = Vec2::Zero();
  double b = 0.0;
};

/// min |u - u_nominal|^2  s.t.  u_min <= u <= u_max,  a_k^T u <= b_k.
struct QpProblem {
  Vec2 u_nominal = Vec2::Zero();
  Vec2 u_min = Vec2::Constant(-5.0);
  Vec2 u_max = Vec2::Constant(5.0);
  std::vector<LinearRow> constraints;

  void validate() const;
};

struct QpSolution {
  Vec2 u = Vec2::Zero();
  bool feasible = true;
  /// Max over rows of (a^T u - b)_+ at the returned point; 0 when feasible.
  double max_violation = 0.0;
  /// Indices of active rows. Rows 0..n-1 are the user constraints, n..n+3 the
  /// box faces in the order x <= max, y <= max, -x <= -min, -y <= -min.
  std::vector<int> active;
  /// Multipliers of the active rows for the objective 1/2 |u - u_nominal|^2.
  std::vector<double> multipliers;
  int iterations = 0;
};

/// Dense dual active-set solver (Goldfarb-Idnani with identity Hessian).
///
/// When the rows and box are jointly infeasible the solver returns the point
/// of the box minimising the largest row violation (ties broken by distance to
/// u_nominal) and sets feasible = false.
QpSolution solve_qp(const QpProblem& qp);

/// All rows of the problem, user constraints first, then the four box faces.
std::vector<LinearRow> all_rows(const QpProblem& qp);

/// Largest KKT residual of a candidate: stationarity, primal violation,
/// dual sign and complementarity, each in absolute units.
double kkt_residual(const QpProblem& qp, const QpSolution& sol);

}  // namespace pcbf
