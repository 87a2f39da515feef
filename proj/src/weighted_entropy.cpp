#include "wbe/weighted_entropy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "wbe/errors.hpp"
#include "wbe/simplex.hpp"

namespace wbe {

double cover_cost(const Cover& cover, double s) {
  double total = 0.0;
  for (const Ball& b : cover.balls) total += std::exp(-s * b.order);
  return total;
}

namespace {

struct Window {
  int len1;
  int len2;
};

Window window_of(const WeightVector& a, int order, int k) {
  if (order == 0) return {0, 0};
  const auto spec = ball_spec(a, order, k);
  return {spec.len1, spec.len2};
}

void enumerate_words(const Sft& sft, int length, Word& current,
                     const std::function<void(const Word&)>& visit) {
  if (static_cast<int>(current.size()) == length) {
    visit(current);
    return;
  }
  for (Symbol s = 0; s < sft.size(); ++s) {
    if (!current.empty() && !sft.allowed(current.back(), s)) continue;
    current.push_back(s);
    enumerate_words(sft, length, current, visit);
    current.pop_back();
  }
}

}  // namespace

int max_order_within(const WeightVector& a, int k, int depth_cap) {
  int n = 0;
  while (ball_spec(a, n + 1, k).len2 <= depth_cap) ++n;
  return n;
}

int default_min_order(const WeightVector& a, int k, int depth_cap) {
  const int n_max = max_order_within(a, k, depth_cap);
  require(n_max >= 1, "depth cap " + std::to_string(depth_cap) + " admits no ball");
  return std::max(1, static_cast<int>(std::ceil(0.8 * n_max - 1e-9)));
}

bool covers_system(const SymbolicSystem& system, const WeightVector& a, const Cover& cover,
                   int depth) {
  std::vector<WeightedBallSpec> specs;
  for (const Ball& b : cover.balls) {
    if (b.order < cover.min_order) return false;
    specs.push_back(ball_spec(a, b.order, b.resolution));
    require(specs.back().len2 <= depth, "cover check depth is shallower than a ball window");
    require(static_cast<int>(b.center.size()) >= specs.back().len2, "ball center too short");
  }
  bool all = true;
  Word current;
  enumerate_words(system.source(), depth, current, [&](const Word& w) {
    if (!all) return;
    bool hit = false;
    for (std::size_t j = 0; j < cover.balls.size() && !hit; ++j)
      hit = in_weighted_ball(cover.balls[j].center, w, specs[j], system.code());
    all = hit;
  });
  return all;
}

CoverTree::CoverTree(const SymbolicSystem& system, const WeightVector& a,
                     const CoverProblem& problem, std::size_t max_nodes)
    : system_(&system), a_(a), problem_(problem), max_nodes_(max_nodes) {
  require(problem.min_order >= 1, "minimum ball order N must be at least 1");
  require(problem.resolution_k >= 0, "resolution k must be nonnegative");
  if (problem.first_symbols)
    require(static_cast<int>(problem.first_symbols->size()) == system.source().size(),
            "first-symbol mask has the wrong length");
  const auto first = ball_spec(a, problem.min_order, problem.resolution_k);
  require(first.len2 <= problem.depth_cap,
          "depth cap " + std::to_string(problem.depth_cap) +
              " is too small to admit a ball of order N (needs " + std::to_string(first.len2) + ")");
  n_max_ = max_order_within(a, problem.resolution_k, problem.depth_cap);
  std::unordered_map<std::string, int> memo;
  std::function<int(int, std::optional<Symbol>, const Word&)> visit =
      [&](int order, std::optional<Symbol> last, const Word& tail) -> int {
    std::string key;
    key.reserve(tail.size() + 8);
    key.append(reinterpret_cast<const char*>(&order), sizeof order);
    const int last_code = last ? *last : -1;
    key.append(reinterpret_cast<const char*>(&last_code), sizeof last_code);
    for (Symbol c : tail) key.push_back(static_cast<char>(c));
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    Node node{order, {}};
    if (order < n_max_) {
      const Window cur = window_of(a_, order, problem_.resolution_k);
      const Window next = window_of(a_, order + 1, problem_.resolution_k);
      const Sft& sft = system_->source();
      const FactorCode& code = system_->code();
      Word extension;
      // Extend the fixed prefix over [cur.len1, next.len1), then the factor
      // tail over [max(next.len1, cur.len2), next.len2).
      std::function<void(std::optional<Symbol>)> extend = [&](std::optional<Symbol> tip) {
        const int pos = cur.len1 + static_cast<int>(extension.size());
        if (pos == next.len1) {
          Word inherited;
          if (next.len1 < cur.len2)
            inherited.assign(tail.begin() + (next.len1 - cur.len1), tail.end());
          auto states = reachable_states(*system_, tip, inherited);
          if (std::none_of(states.begin(), states.end(), [](bool b) { return b; })) return;
          const int fresh = next.len2 - std::max(next.len1, cur.len2);
          Word new_tail;
          std::function<void(const std::vector<bool>&)> grow = [&](const std::vector<bool>& set) {
            if (static_cast<int>(new_tail.size()) == fresh) {
              Word child_tail = inherited;
              child_tail.insert(child_tail.end(), new_tail.begin(), new_tail.end());
              const Symbol child_last = extension.empty() ? *last : extension.back();
              const int child = visit(order + 1, child_last, child_tail);
              node.edges.push_back({child, extension, new_tail});
              return;
            }
            for (Symbol c = 0; c < code.target_size(); ++c) {
              std::vector<bool> step(set.size(), false);
              bool nonempty = false;
              for (int j = 0; j < sft.size(); ++j) {
                if (code(j) != c) continue;
                for (int i = 0; i < sft.size(); ++i)
                  if (set[i] && sft.allowed(i, j)) {
                    step[j] = nonempty = true;
                    break;
                  }
              }
              if (!nonempty) continue;
              new_tail.push_back(c);
              grow(step);
              new_tail.pop_back();
            }
          };
          grow(states);
          return;
        }
        for (Symbol s = 0; s < sft.size(); ++s) {
          if (tip && !sft.allowed(*tip, s)) continue;
          if (!tip && problem_.first_symbols && !(*problem_.first_symbols)[s]) continue;
          if (pos < cur.len2 && code(s) != tail[pos - cur.len1]) continue;
          extension.push_back(s);
          extend(s);
          extension.pop_back();
        }
      };
      extend(last);
    }
    if (nodes_.size() >= max_nodes_) throw Refusal("cover tree exceeds the configured node cap");
    nodes_.push_back(std::move(node));
    const int index = static_cast<int>(nodes_.size()) - 1;
    memo.emplace(std::move(key), index);
    return index;
  };
  root_ = visit(0, std::nullopt, {});
}

std::vector<double> CoverTree::evaluate(double s) const {
  std::vector<double> cost(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    const double own = node.order >= problem_.min_order ? std::exp(-s * node.order)
                                                        : std::numeric_limits<double>::infinity();
    if (node.order == n_max_) {
      cost[i] = own;
      continue;
    }
    double children = 0.0;
    for (const Edge& e : node.edges) children += cost[static_cast<std::size_t>(e.child)];
    cost[i] = std::min(own, children);
  }
  return cost;
}

double CoverTree::cost(double s) const { return evaluate(s)[static_cast<std::size_t>(root_)]; }

double CoverTree::leaf_count() const {
  std::vector<double> count(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].order == n_max_) {
      count[i] = 1.0;
      continue;
    }
    double total = 0.0;
    for (const Edge& e : nodes_[i].edges) total += count[static_cast<std::size_t>(e.child)];
    count[i] = total;
  }
  return count[static_cast<std::size_t>(root_)];
}

Cover CoverTree::optimal_cover(double s) const {
  const auto cost = evaluate(s);
  Cover cover;
  cover.min_order = problem_.min_order;
  std::function<void(int, const Word&, const Word&)> walk = [&](int index, const Word& prefix,
                                                                const Word& tail) {
    const Node& node = nodes_[static_cast<std::size_t>(index)];
    double children = 0.0;
    for (const Edge& e : node.edges) children += cost[static_cast<std::size_t>(e.child)];
    const bool take = node.order >= problem_.min_order &&
                      (node.order == n_max_ || std::exp(-s * node.order) <= children);
    if (take) {
      cover.balls.push_back({realize(*system_, {prefix, tail}), node.order,
                             problem_.resolution_k});
      return;
    }
    const Window cur = window_of(a_, node.order, problem_.resolution_k);
    const Window next = window_of(a_, node.order + 1, problem_.resolution_k);
    for (const Edge& e : node.edges) {
      Word child_prefix = prefix;
      child_prefix.insert(child_prefix.end(), e.prefix_extension.begin(), e.prefix_extension.end());
      Word child_tail;
      if (next.len1 < cur.len2) child_tail.assign(tail.begin() + (next.len1 - cur.len1), tail.end());
      child_tail.insert(child_tail.end(), e.new_tail.begin(), e.new_tail.end());
      walk(e.child, child_prefix, child_tail);
    }
  };
  walk(root_, {}, {});
  return cover;
}

double min_cover_cost(const SymbolicSystem& system, const WeightVector& a, double s,
                      const CoverProblem& problem) {
  return CoverTree(system, a, problem).cost(s);
}

ExponentBracket critical_exponent(const SymbolicSystem& system, const WeightVector& a,
                                  const CoverProblem& problem, double tol) {
  require(tol > 0.0, "bisection tolerance must be positive");
  using Clock = std::chrono::steady_clock;
  const CoverTree tree(system, a, problem);
  ExponentBracket out;
  auto probe = [&](double s) {
    const auto start = Clock::now();
    const double c = tree.cost(s);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    out.trace.push_back({s, problem.depth_cap, c, ms});
    return c;
  };
  const double at_zero = probe(0.0);
  if (at_zero < 1.0 || tree.leaf_count() == 1.0) {
    // A single cell at every order: the system is one point.
    out.zero_entropy = true;
    out.cost_low = out.cost_high = at_zero;
    return out;
  }
  double lo = 0.0;
  double hi = std::log(static_cast<double>(system.source().size())) * a.total() + 1.0;
  double cost_lo = at_zero;
  double cost_hi = probe(hi);
  if (cost_hi >= 1.0)
    throw InvariantViolation("cover cost does not drop below 1 before s = log|A|(a1+a2)+1");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double c = probe(mid);
    if (c >= 1.0) {
      lo = mid;
      cost_lo = c;
    } else {
      hi = mid;
      cost_hi = c;
    }
  }
  out.s_low = lo;
  out.s_high = hi;
  out.cost_low = cost_lo;
  out.cost_high = cost_hi;
  return out;
}

FractionalCoverResult fractional_cover(const SymbolicSystem& system, const WeightVector& a,
                                       double s, const CoverProblem& problem) {
  require(problem.min_order >= 1, "minimum ball order N must be at least 1");
  const auto first = ball_spec(a, problem.min_order, problem.resolution_k);
  require(first.len2 <= problem.depth_cap, "depth cap is too small to admit a ball of order N");
  const int n_max = max_order_within(a, problem.resolution_k, problem.depth_cap);
  auto keep = [&](const WeightedCylinder& c) {
    return !problem.first_symbols || (*problem.first_symbols)[c.prefix.front()];
  };
  struct Candidate {
    WeightedCylinder cell;
    int order;
    WeightedBallSpec spec;
  };
  std::vector<Candidate> balls;
  std::vector<WeightedCylinder> leaves;
  for (int n = problem.min_order; n <= n_max; ++n) {
    const auto spec = ball_spec(a, n, problem.resolution_k);
    auto cells = enumerate_weighted_cylinders(system, spec.len1, spec.len2, problem.depth_cap,
                                              kMaxLpVariables + 1);
    for (auto& c : cells) {
      if (!keep(c)) continue;
      if (n == n_max) leaves.push_back(c);
      balls.push_back({std::move(c), n, spec});
      if (balls.size() > kMaxLpVariables)
        throw Refusal("fractional cover has more than " + std::to_string(kMaxLpVariables) +
                      " candidate balls");
    }
  }
  if (leaves.size() > kMaxLpConstraints)
    throw Refusal("fractional cover has " + std::to_string(leaves.size()) +
                  " constraints; the cap is " + std::to_string(kMaxLpConstraints));
  const FactorCode& code = system.code();
  const auto leaf_spec = ball_spec(a, n_max, problem.resolution_k);
  auto leaf_factor = [&](const WeightedCylinder& leaf, int pos) {
    return pos < leaf_spec.len1 ? code(leaf.prefix[pos]) : leaf.factor_tail[pos - leaf_spec.len1];
  };
  auto contains = [&](const Candidate& ball, const WeightedCylinder& leaf) {
    for (int p = 0; p < ball.spec.len1; ++p)
      if (leaf.prefix[p] != ball.cell.prefix[p]) return false;
    for (int p = ball.spec.len1; p < ball.spec.len2; ++p)
      if (leaf_factor(leaf, p) != ball.cell.factor_tail[p - ball.spec.len1]) return false;
    return true;
  };
  // Dual packing LP: max sum y_leaf s.t. sum_{leaf in ball} y_leaf <= exp(-s n_ball).
  const auto nb = static_cast<Eigen::Index>(balls.size());
  const auto nl = static_cast<Eigen::Index>(leaves.size());
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(nb, nl);
  Eigen::VectorXd price(nb);
  for (Eigen::Index j = 0; j < nb; ++j) {
    price(j) = std::exp(-s * balls[static_cast<std::size_t>(j)].order);
    for (Eigen::Index i = 0; i < nl; ++i)
      if (contains(balls[static_cast<std::size_t>(j)], leaves[static_cast<std::size_t>(i)]))
        incidence(j, i) = 1.0;
  }
  const auto lp = maximize_with_slack_basis(incidence, price, Eigen::VectorXd::Ones(nl));
  FractionalCoverResult out;
  out.value = lp.value;
  for (Eigen::Index j = 0; j < nb; ++j) {
    const double w = lp.dual(j);
    if (w <= 1e-12) continue;
    const auto& ball = balls[static_cast<std::size_t>(j)];
    out.balls.push_back({realize(system, ball.cell), ball.order, problem.resolution_k});
    out.weights.push_back(w);
  }
  return out;
}

namespace {

// Smallest m >= 1 with acc + m * mass > target; ties at integers resolved as exact.
long double cells_needed(long double target, long double acc, long double mass) {
  long double q = (target - acc) / mass;
  const long double r = std::round(q);
  if (std::abs(q - r) <= 1e-9L * std::max(1.0L, std::abs(q))) q = r;
  return std::max(1.0L, std::floor(q) + 1.0L);
}

// Exact C(n, r) for the sizes used here.
long double binomial(int n, int r) {
  if (r < 0 || r > n) return 0.0L;
  r = std::min(r, n - r);
  unsigned __int128 v = 1;
  for (int i = 1; i <= r; ++i) v = v * static_cast<unsigned>(n - r + i) / static_cast<unsigned>(i);
  return static_cast<long double>(v);
}

struct TypeClass {
  long double log_mass;  // log measure of one cell
  long double count;     // number of cells
};

void compositions(int total, std::span<const long double> logs, std::size_t index, int left,
                  long double log_mass, long double count, std::vector<TypeClass>& out) {
  if (index + 1 == logs.size()) {
    out.push_back({log_mass + left * logs[index], count});
    return;
  }
  for (int c = 0; c <= left; ++c)
    compositions(total, logs, index + 1, left - c, log_mass + c * logs[index],
                 count * binomial(left, c), out);
}

std::vector<TypeClass> type_classes(std::span<const long double> logs, int length) {
  std::vector<TypeClass> out;
  if (length == 0 || logs.empty()) {
    out.push_back({0.0L, 1.0L});
    return out;
  }
  compositions(length, logs, 0, length, 0.0L, 1.0L, out);
  return out;
}

std::uint64_t covering_from_classes(std::vector<TypeClass> classes, double delta) {
  std::sort(classes.begin(), classes.end(),
            [](const TypeClass& x, const TypeClass& y) { return x.log_mass > y.log_mass; });
  const long double target = 1.0L - static_cast<long double>(delta);
  long double acc = 0.0L;
  long double used = 0.0L;
  constexpr long double kLimit = 9.2e18L;
  for (const auto& tc : classes) {
    const long double mass = std::exp(tc.log_mass);
    if (mass <= 0.0L) break;
    const long double need = cells_needed(target, acc, mass);
    if (need <= tc.count) {
      used += need;
      if (used > kLimit) throw Refusal("Katok covering number exceeds 64-bit range");
      return static_cast<std::uint64_t>(used);
    }
    acc += tc.count * mass;
    used += tc.count;
    if (used > kLimit) throw Refusal("Katok covering number exceeds 64-bit range");
  }
  throw InvariantViolation("Katok cover failed to reach the required mass");
}

}  // namespace

std::uint64_t katok_covering_number(const SymbolicSystem& system, const Measure& m,
                                    const WeightVector& a, int n, int k, double delta) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  check_support(m, system.source());
  const auto spec = ball_spec(a, n, k);
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) {
    // Cell measure depends only on symbol counts in the prefix and column
    // counts in the tail; every supported combination is a nonempty cell.
    const auto q = pushforward_bernoulli(*b, system.code());
    std::vector<long double> symbol_logs;
    std::vector<long double> column_logs;
    for (double p : b->probs())
      if (p > 0.0) symbol_logs.push_back(std::log(static_cast<long double>(p)));
    for (double p : q.probs())
      if (p > 0.0) column_logs.push_back(std::log(static_cast<long double>(p)));
    const auto head = type_classes(symbol_logs, spec.len1);
    const auto tail = type_classes(column_logs, spec.len2 - spec.len1);
    if (head.size() * tail.size() > (std::size_t{1} << 24))
      throw Refusal("too many type classes for the Katok covering number");
    std::vector<TypeClass> classes;
    classes.reserve(head.size() * tail.size());
    for (const auto& h : head)
      for (const auto& t : tail) classes.push_back({h.log_mass + t.log_mass, h.count * t.count});
    return covering_from_classes(std::move(classes), delta);
  }
  const auto cells =
      enumerate_weighted_cylinders(system, spec.len1, spec.len2, spec.len2, kMaxKatokCylinders);
  const auto fibers = system.code().fibers();
  std::vector<TypeClass> classes;
  classes.reserve(cells.size());
  for (const auto& cell : cells) {
    Word center = cell.prefix;
    for (Symbol c : cell.factor_tail) center.push_back(fibers[c].front());
    const double lm =
        weighted_cylinder_log_measure(m, system.code(), center, spec.len1, spec.len2);
    if (std::isfinite(lm)) classes.push_back({lm, 1.0L});
  }
  return covering_from_classes(std::move(classes), delta);
}

std::pair<double, double> least_squares_line(std::span<const double> xs,
                                             std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "least squares needs at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  require(sxx > 0.0, "least squares fit is degenerate");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

KatokEstimate katok_entropy_estimate(const SymbolicSystem& system, const Measure& m,
                                     const WeightVector& a, int k, std::span<const int> n_grid,
                                     double delta) {
  require(!n_grid.empty(), "n grid must be nonempty");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    require(n_grid[i] > n_grid[i - 1], "n grid must be strictly increasing");
  KatokEstimate out;
  std::vector<double> xs;
  std::vector<double> ys;
  for (int n : n_grid) {
    const auto count = katok_covering_number(system, m, a, n, k, delta);
    out.ns.push_back(n);
    out.counts.push_back(count);
    xs.push_back(n);
    ys.push_back(std::log(static_cast<double>(count)));
  }
  if (xs.size() >= 2) {
    const auto [slope, intercept] = least_squares_line(xs, ys);
    out.slope = slope;
    out.intercept = intercept;
  } else {
    out.slope = ys.front() / xs.front();
  }
  return out;
}

}  // namespace wbe
