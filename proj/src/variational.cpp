#include "wbe/variational.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "wbe/errors.hpp"
#include "wbe/rng.hpp"

namespace wbe {

ColumnStructure ColumnStructure::from_code(const FactorCode& code) {
  return {code.fibers()};
}

ColumnStructure ColumnStructure::from_counts(std::span<const int> counts) {
  require(!counts.empty(), "column structure needs at least one column");
  ColumnStructure out;
  Symbol next = 0;
  for (int c : counts) {
    require(c >= 1, "every column needs at least one symbol");
    std::vector<Symbol> col(static_cast<std::size_t>(c));
    std::iota(col.begin(), col.end(), next);
    next += c;
    out.columns.push_back(std::move(col));
  }
  return out;
}

std::vector<int> ColumnStructure::counts() const {
  std::vector<int> out;
  for (const auto& c : columns) out.push_back(static_cast<int>(c.size()));
  return out;
}

int ColumnStructure::alphabet_size() const {
  int n = 0;
  for (const auto& c : columns) n += static_cast<int>(c.size());
  return n;
}

std::vector<Symbol> ColumnStructure::table() const {
  std::vector<Symbol> t(static_cast<std::size_t>(alphabet_size()), -1);
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (Symbol s : columns[j]) t[static_cast<std::size_t>(s)] = static_cast<Symbol>(j);
  return t;
}

std::string_view method_name(VariationalMethod m) {
  switch (m) {
    case VariationalMethod::closed_form: return "closed-form";
    case VariationalMethod::gradient: return "gradient";
    case VariationalMethod::grid: return "grid";
    case VariationalMethod::markov_search: return "markov-search";
  }
  return "unknown";
}

namespace {

std::vector<double> column_masses(const ColumnStructure& cols, std::span<const double> p) {
  std::vector<double> q;
  q.reserve(cols.columns.size());
  for (const auto& col : cols.columns) {
    double s = 0.0;
    for (Symbol d : col) s += p[static_cast<std::size_t>(d)];
    q.push_back(s);
  }
  return q;
}

void check_shape(const ColumnStructure& cols, std::span<const double> p) {
  require(static_cast<int>(p.size()) == cols.alphabet_size(),
          "probability vector does not match the alphabet");
}

}  // namespace

double variational_objective(const ColumnStructure& cols, const WeightVector& a,
                             std::span<const double> p) {
  check_shape(cols, p);
  const auto q = column_masses(cols, p);
  return a.a1() * shannon_entropy(p) + a.a2() * shannon_entropy(q);
}

VariationalResult lagrange_optimum(const ColumnStructure& cols, const WeightVector& a) {
  const double t = a.a1() / a.total();
  const auto counts = cols.counts();
  require(!counts.empty(), "column structure is empty");
  double z = 0.0;
  for (int n : counts) z += std::pow(static_cast<double>(n), t);
  std::vector<double> p(static_cast<std::size_t>(cols.alphabet_size()));
  for (std::size_t j = 0; j < cols.columns.size(); ++j) {
    const double n = static_cast<double>(counts[j]);
    const double qj = std::pow(n, t) / z;
    for (Symbol d : cols.columns[j]) p[static_cast<std::size_t>(d)] = qj / n;
  }
  VariationalResult out;
  out.value = a.total() * std::log(z);
  out.optimizer = BernoulliMeasure(std::move(p));
  out.method = VariationalMethod::closed_form;
  return out;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  require(!v.empty(), "cannot project an empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumulative += u[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[i] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
  return out;
}

VariationalResult projected_gradient(const ColumnStructure& cols, const WeightVector& a,
                                     double tol, std::uint64_t seed, int max_iterations) {
  require(tol > 0.0, "gradient tolerance must be positive");
  const auto n = static_cast<std::size_t>(cols.alphabet_size());
  const auto table = cols.table();
  Rng rng(seed);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) total += (x = 0.5 + rng.uniform());
  for (auto& x : p) x /= total;

  auto f = [&](std::span<const double> x) { return variational_objective(cols, a, x); };
  auto gradient = [&](std::span<const double> x) {
    const auto q = column_masses(cols, x);
    std::vector<double> g(n);
    for (std::size_t d = 0; d < n; ++d) {
      const double pd = std::max(x[d], 1e-300);
      const double qj = std::max(q[static_cast<std::size_t>(table[d])], 1e-300);
      g[d] = -a.a1() * (std::log(pd) + 1.0) - a.a2() * (std::log(qj) + 1.0);
    }
    // Directions stay on the simplex, so the mean is irrelevant; removing it
    // keeps inner products with tiny directions free of cancellation.
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
    for (auto& x : g) x -= mean;
    return g;
  };

  VariationalResult out;
  out.method = VariationalMethod::gradient;
  out.converged = false;
  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double t = 0.0;
    for (std::size_t d = 0; d < n; ++d) t += u[d] * v[d];
    return t;
  };
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const auto g = gradient(p);
    std::vector<double> trial(n);
    for (std::size_t d = 0; d < n; ++d) trial[d] = p[d] + g[d];
    const auto target = project_to_simplex(trial);
    std::vector<double> dir(n);
    double map_norm = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      dir[d] = target[d] - p[d];
      map_norm += dir[d] * dir[d];
    }
    map_norm = std::sqrt(map_norm);
    if (map_norm < tol) {
      out.converged = true;
      break;
    }
    // f is concave along the segment p -> target, so the best point is where
    // the directional derivative changes sign. Gradients stay accurate long
    // after function differences fall below rounding.
    auto point = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d) x[d] = std::max(0.0, p[d] + t * dir[d]);
      return x;
    };
    double lo = 0.0, hi = 1.0;
    if (dot(gradient(point(1.0)), dir) >= 0.0) {
      lo = 1.0;
    } else {
      for (int b = 0; b < 60 && hi - lo > 1e-15; ++b) {
        const double mid = 0.5 * (lo + hi);
        if (dot(gradient(point(mid)), dir) >= 0.0) lo = mid;
        else hi = mid;
      }
    }
    if (lo == 0.0) lo = hi;
    p = point(lo);
  }
  out.value = f(p);
  out.optimizer = BernoulliMeasure(std::move(p));
  return out;
}

VariationalResult grid_oracle(const ColumnStructure& cols, const WeightVector& a, double step) {
  const int n = cols.alphabet_size();
  if (n > kMaxGridAlphabet)
    throw Refusal("grid oracle refuses alphabets larger than " + std::to_string(kMaxGridAlphabet));
  require(step > 0.0 && step <= 0.02, "grid step must lie in (0, 0.02]");
  const int m = static_cast<int>(std::lround(1.0 / step));
  require(std::abs(m * step - 1.0) < 1e-9, "grid step must divide 1");
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::vector<double> p(static_cast<std::size_t>(n));
  std::vector<double> best;
  double best_value = -1.0;
  // Lexicographic order on p: the first coordinate varies slowest.
  auto visit = [&](auto&& self, int index, int left) -> void {
    if (index == n - 1) {
      counts[static_cast<std::size_t>(index)] = left;
      for (int d = 0; d < n; ++d)
        p[static_cast<std::size_t>(d)] = counts[static_cast<std::size_t>(d)] / static_cast<double>(m);
      const double v = variational_objective(cols, a, p);
      if (v > best_value) {
        best_value = v;
        best = p;
      }
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[static_cast<std::size_t>(index)] = c;
      self(self, index + 1, left - c);
    }
  };
  visit(visit, 0, m);
  VariationalResult out;
  out.value = best_value;
  out.optimizer = BernoulliMeasure(std::move(best));
  out.method = VariationalMethod::grid;
  return out;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits, const Sft& sft) {
  const int n = sft.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (sft.allowed(i, j)) top = std::max(top, logits(i, j));
    double z = 0.0;
    for (int j = 0; j < n; ++j)
      if (sft.allowed(i, j)) z += (p(i, j) = std::exp(logits(i, j) - top));
    p.row(i) /= z;
  }
  return p;
}

constexpr int kSearchDepth = 6;

}  // namespace

MarkovVariationalResult variational_optimum(const SymbolicSystem& system, const WeightVector& a,
                                            std::uint64_t seed, int iterations) {
  const Sft& sft = system.source();
  const FactorCode& code = system.code();
  MarkovVariationalResult out{BernoulliMeasure::uniform(1), {}, VariationalMethod::closed_form,
                              true, 0};
  if (sft.is_full()) {
    auto r = lagrange_optimum(ColumnStructure::from_code(code), a);
    out.value = EntropyInterval::exact(r.value);
    out.optimizer = std::move(r.optimizer);
    return out;
  }
  auto parry = parry_measure(sft);
  if (code.injective()) {
    // The factor is a conjugate copy; the Parry measure maximizes both terms.
    out.value = EntropyInterval::exact(a.total() * markov_entropy(parry));
    out.optimizer = std::move(parry);
    return out;
  }
  const int n = sft.size();
  auto lower_objective = [&](const MarkovMeasure& m) {
    const auto b = hidden_markov_entropy_bounds(m, code, kSearchDepth, 1e-9);
    return a.a1() * markov_entropy(m) + a.a2() * b.interval.lower;
  };
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (sft.allowed(i, j)) logits(i, j) = std::log(parry.transition(i, j));
  MarkovMeasure current(softmax_rows(logits, sft));
  double best = lower_objective(current);
  Rng rng(seed);
  double radius = 0.5;
  int accepted = 0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd trial = logits;
    const int row = static_cast<int>(rng.next() % static_cast<std::uint64_t>(n));
    for (int j = 0; j < n; ++j)
      if (sft.allowed(row, j)) trial(row, j) += radius * (2.0 * rng.uniform() - 1.0);
    MarkovMeasure candidate(softmax_rows(trial, sft));
    const double v = lower_objective(candidate);
    if (v > best) {
      best = v;
      logits = std::move(trial);
      current = std::move(candidate);
      ++accepted;
    } else if ((it + 1) % 50 == 0) {
      radius *= 0.7;
    }
    out.iterations = it + 1;
  }
  const auto fe = factor_entropy(current, code);
  const double h = markov_entropy(current);
  out.value = EntropyInterval(a.a1() * h + a.a2() * fe.lower, a.a1() * h + a.a2() * fe.upper);
  out.optimizer = std::move(current);
  out.method = VariationalMethod::markov_search;
  out.converged = radius < 0.05 || accepted == 0;
  return out;
}

VariationalGapReport variational_gap_report(const SymbolicSystem& system, const WeightVector& a,
                                            const CoverProblem& problem, double tol,
                                            std::uint64_t seed, double slack) {
  VariationalGapReport r;
  r.variational = variational_optimum(system, a, seed).value;
  r.bracket = critical_exponent(system, a, problem, tol);
  r.gap = std::abs(r.bracket.center() - r.variational.lower);
  r.slack = slack;
  r.lower_bound_consistent = r.variational.lower <= r.bracket.s_high + slack;
  return r;
}

}  // namespace wbe
