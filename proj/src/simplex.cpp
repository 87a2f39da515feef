#include "wbe/simplex.hpp"

#include <limits>
#include <vector>

#include "wbe/errors.hpp"

namespace wbe {

LpSolution maximize_with_slack_basis(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& c, int max_pivots) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  require(b.size() == m && c.size() == n, "LP dimensions do not match");
  require(m == 0 || b.minCoeff() >= 0.0, "LP right-hand side must be nonnegative");
  constexpr double kEps = 1e-12;

  // Tableau columns: n structural, m slack, then rhs. Last row is the
  // reduced-cost row (negated objective).
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(n + m).head(m) = b;
  t.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;

  LpSolution out;
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (t(m, j) < -kEps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, enter) <= kEps) continue;
      const double ratio = t(i, n + m) / t(i, enter);
      if (ratio < best - kEps || (ratio <= best + kEps && leave >= 0 && basis[i] < basis[leave])) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave < 0) throw InvariantViolation("LP is unbounded");
    if (++out.pivots > max_pivots) throw InvariantViolation("LP pivot cap reached");
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[leave] = enter;
  }
  out.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) out.x(basis[i]) = t(i, n + m);
  out.dual = t.row(m).segment(n, m).transpose();
  out.value = t(m, n + m);
  return out;
}

}  // namespace wbe
