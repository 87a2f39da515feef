#pragma once

#include <Eigen/Dense>

namespace wbe {

struct LpSolution {
  double value = 0.0;
  Eigen::VectorXd x;
  /// Optimal solution of the dual: min b.y s.t. A^T y >= c, y >= 0.
  Eigen::VectorXd dual;
  int pivots = 0;
};

/// maximize c.x subject to A x <= b, x >= 0, with b >= 0 so the slack basis is
/// feasible. Dense tableau, Bland's rule. Throws InvariantViolation on an
/// unbounded problem or when the pivot cap is hit.
LpSolution maximize_with_slack_basis(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& c, int max_pivots = 1000000);

}  // namespace wbe
