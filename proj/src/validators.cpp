#include "wbe/validators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wbe/errors.hpp"
#include "wbe/rng.hpp"

namespace wbe {

TailSummary tail_summary(std::span<const double> values) {
  require(!values.empty(), "tail summary of an empty series");
  const std::size_t start = (2 * values.size()) / 3;
  const auto tail = values.subspan(std::min(start, values.size() - 1));
  TailSummary t;
  t.min = *std::min_element(tail.begin(), tail.end());
  t.max = *std::max_element(tail.begin(), tail.end());
  double sum = 0.0;
  for (double v : tail) sum += v;
  t.mean = sum / static_cast<double>(tail.size());
  return t;
}

namespace {

void check_grid(std::span<const int> n_grid) {
  require(!n_grid.empty(), "n grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    require(n_grid[i] >= 1, "n grid entries must be positive");
    if (i) require(n_grid[i] > n_grid[i - 1], "n grid must be strictly increasing");
  }
}

// Per-column mean and 3 sd / sqrt(rows) over a rows x cols table.
void aggregate(const std::vector<std::vector<double>>& table, ConvergenceSeries& s) {
  const auto rows = static_cast<double>(table.size());
  const std::size_t cols = table.front().size();
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (const auto& row : table) sum += row[c];
    const double mean = sum / rows;
    double ss = 0.0;
    for (const auto& row : table) ss += (row[c] - mean) * (row[c] - mean);
    const double sd = table.size() > 1 ? std::sqrt(ss / (rows - 1.0)) : 0.0;
    s.values.push_back(mean);
    s.ci_halfwidth.push_back(3.0 * sd / std::sqrt(rows));
  }
}

Eigen::VectorXd one_symbol_marginal(const Measure& m) {
  if (const auto* b = std::get_if<BernoulliMeasure>(&m))
    return Eigen::Map<const Eigen::VectorXd>(b->probs().data(), b->size());
  return std::get<MarkovMeasure>(m).stationary();
}

}  // namespace

SmbResult smb_series(const Measure& m, const FactorCode& code, const WeightVector& a,
                     std::span<const int> n_grid, int trajectories, std::uint64_t seed) {
  require(trajectories >= 1, "need at least one trajectory");
  check_grid(n_grid);
  SmbResult out;
  out.series.ns.assign(n_grid.begin(), n_grid.end());
  out.series.target = weighted_measure_entropy(a, m, code);
  const Eigen::VectorXd pi = one_symbol_marginal(m);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(code.target_size());
  for (Eigen::Index s = 0; s < pi.size(); ++s) q(code(static_cast<Symbol>(s))) += pi(s);
  const int length = ceil_window(a.total() * n_grid.back());
  std::vector<std::vector<double>> table;
  out.zm_max = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trajectories; ++t) {
    const Word x = sample_trajectory(m, length, derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> row;
    for (int n : n_grid) {
      const int len1 = ceil_window(a.a1() * n);
      const int len2 = ceil_window(a.total() * n);
      row.push_back(-weighted_cylinder_log_measure(m, code, x, len1, len2) / n);
    }
    const int n = n_grid.back();
    const int len1 = ceil_window(a.a1() * n);
    const int len2 = ceil_window(a.total() * n);
    double log_nu = 0.0;
    for (int i = 0; i < len1; ++i) log_nu += std::log(pi(x[static_cast<std::size_t>(i)]));
    for (int i = len1; i < len2; ++i) log_nu += std::log(q(code(x[static_cast<std::size_t>(i)])));
    out.zm_max = std::max(out.zm_max, log_nu / n + row.back());
    table.push_back(std::move(row));
  }
  aggregate(table, out.series);
  return out;
}

BrinKatokResult brin_katok_series(const Measure& m, const FactorCode& code, const WeightVector& a,
                                  int k, std::span<const int> n_grid, int points,
                                  std::uint64_t seed) {
  require(points >= 1, "need at least one point");
  require(k >= 0, "resolution k must be nonnegative");
  check_grid(n_grid);
  BrinKatokResult out;
  out.series.ns.assign(n_grid.begin(), n_grid.end());
  out.series.target = weighted_measure_entropy(a, m, code);
  const int length = ball_spec(a, n_grid.back(), k).len2;
  std::vector<std::vector<double>> table;
  for (int p = 0; p < points; ++p) {
    const Word x = sample_trajectory(m, length, derive_seed(seed, static_cast<std::uint64_t>(p)));
    std::vector<double> row;
    for (int n : n_grid) {
      const auto spec = ball_spec(a, n, k);
      row.push_back(-weighted_cylinder_log_measure(m, code, x, spec.len1, spec.len2) / n);
    }
    out.point_tail_gap = std::max(out.point_tail_gap, tail_summary(row).gap());
    table.push_back(std::move(row));
  }
  aggregate(table, out.series);
  out.tail = tail_summary(out.series.values);
  return out;
}

KatokDeltaReport katok_delta_report(const SymbolicSystem& system, const Measure& m,
                                    const WeightVector& a, int k, std::span<const int> n_grid,
                                    std::span<const double> deltas, double tolerance) {
  require(!deltas.empty(), "need at least one delta");
  KatokDeltaReport r;
  for (double d : deltas) {
    require(d > 0.0 && d < 1.0, "every delta must lie in (0,1)");
    r.deltas.push_back(d);
    r.estimates.push_back(katok_entropy_estimate(system, m, a, k, n_grid, d));
  }
  for (std::size_t i = 0; i < r.estimates.size(); ++i)
    for (std::size_t j = i + 1; j < r.estimates.size(); ++j)
      r.max_pairwise = std::max(r.max_pairwise,
                                std::abs(r.estimates[i].slope - r.estimates[j].slope));
  r.pass = r.max_pairwise <= tolerance;
  return r;
}

namespace {

// allowed[i] is the set of source symbols permitted at position i.
using Constraint = std::vector<std::vector<bool>>;

double constrained_measure(const Measure& m, const Constraint& allowed) {
  const int n = measure_size(m);
  if (allowed.empty()) return 1.0;
  auto ok = [&](std::size_t pos, int s) { return allowed[pos][static_cast<std::size_t>(s)]; };
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) {
    double total = 1.0;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      double mass = 0.0;
      for (int s = 0; s < n; ++s)
        if (ok(i, s)) mass += (*b)[s];
      total *= mass;
    }
    return total;
  }
  const auto& mk = std::get<MarkovMeasure>(m);
  Eigen::VectorXd f(n);
  for (int s = 0; s < n; ++s) f(s) = ok(0, s) ? mk.stationary(s) : 0.0;
  for (std::size_t i = 1; i < allowed.size(); ++i) {
    Eigen::VectorXd g = f.transpose() * mk.stochastic();
    for (int s = 0; s < n; ++s)
      if (!ok(i, s)) g(s) = 0.0;
    f = std::move(g);
  }
  return f.sum();
}

// Restricts `c` to points sharing the label of x under partition p.
void restrict_to(Constraint& c, const CylinderPartition& p, const Word& x, const FactorCode& code) {
  for (int i = p.begin; i < p.end; ++i) {
    auto& row = c[static_cast<std::size_t>(i)];
    const Symbol xi = x[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < row.size(); ++s) {
      const bool same = p.factor ? code(static_cast<Symbol>(s)) == code(xi) : static_cast<Symbol>(s) == xi;
      if (!same) row[s] = false;
    }
  }
}

}  // namespace

ChainRuleReport chain_rule_check(const Measure& m, const FactorCode& code,
                                 const CylinderPartition& alpha, const CylinderPartition& beta,
                                 const CylinderPartition& given) {
  for (const auto* p : {&alpha, &beta, &given})
    require(p->begin >= 0 && p->end >= p->begin, "partition window must satisfy 0 <= begin <= end");
  const int n = measure_size(m);
  require(n == code.source_size(), "measure and code disagree on the alphabet");
  const int length = std::max({alpha.end, beta.end, given.end});
  require(std::pow(static_cast<double>(n), length) <= 1 << 16, "chain-rule instance too large");
  ChainRuleReport r;
  Word x(static_cast<std::size_t>(length), 0);
  const Constraint full(static_cast<std::size_t>(length), std::vector<bool>(static_cast<std::size_t>(n), true));
  for (;;) {
    Constraint atom = full;
    restrict_to(atom, alpha, x, code);
    restrict_to(atom, beta, x, code);
    restrict_to(atom, given, x, code);
    // Only one representative per atom: x must be the first word in it.
    bool first = true;
    for (int i = 0; i < length && first; ++i) {
      const auto& row = atom[static_cast<std::size_t>(i)];
      first = std::find(row.begin(), row.end(), true) - row.begin() == x[static_cast<std::size_t>(i)];
    }
    const double mu_all = first ? constrained_measure(m, atom) : 0.0;
    if (mu_all > 0.0) {
      Constraint c_a = full;
      restrict_to(c_a, given, x, code);
      Constraint c_aa = c_a;
      restrict_to(c_aa, alpha, x, code);
      const double mu_a = constrained_measure(m, c_a);
      const double mu_aa = constrained_measure(m, c_aa);
      const double lhs = -std::log(mu_all / mu_a);
      const double rhs = -std::log(mu_aa / mu_a) - std::log(mu_all / mu_aa);
      r.max_residual = std::max(r.max_residual, std::abs(lhs - rhs));
      ++r.atoms;
    }
    int pos = length - 1;
    while (pos >= 0 && ++x[static_cast<std::size_t>(pos)] == n) x[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  r.pass = r.max_residual <= 1e-10;
  return r;
}

}  // namespace wbe
