#include "wbe/rds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wbe/errors.hpp"

namespace wbe {

namespace {

double frac(double x) {
  x -= std::floor(x);
  return x >= 1.0 ? 0.0 : x;
}

Symbol draw(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  Symbol last = 0;
  for (Eigen::Index s = 0; s < probs.size(); ++s) {
    if (probs(s) <= 0.0) continue;
    last = static_cast<Symbol>(s);
    acc += probs(s);
    if (u < acc) return last;
  }
  return last;
}

bool primitive(const Eigen::MatrixXd& p) {
  const auto n = p.rows();
  Eigen::MatrixXi a = (p.array() > 0.0).cast<int>();
  Eigen::MatrixXi power = a;
  const auto bound = (n - 1) * (n - 1) + 1;
  for (Eigen::Index k = 1; k <= bound; ++k) {
    if ((power.array() > 0).all()) return true;
    power = ((power * a).array() > 0).cast<int>();
  }
  return (power.array() > 0).all();
}

}  // namespace

Driver Driver::rotation(double alpha, bool named) {
  require(alpha > 0.0 && alpha < 1.0, "rotation angle must lie in (0,1)");
  Driver d;
  d.kind_ = Kind::rotation;
  d.alpha_ = alpha;
  d.named_ = named;
  return d;
}

Driver Driver::markov_shift(Eigen::MatrixXd stochastic, int window) {
  require(window >= 1, "driver window must be at least 1");
  require(stochastic.rows() >= 1 && stochastic.rows() == stochastic.cols(),
          "driver matrix must be square");
  require(primitive(stochastic), "driver chain is not irreducible and aperiodic");
  Driver d;
  d.kind_ = Kind::markov_shift;
  d.chain_.emplace(std::move(stochastic));
  d.window_ = window;
  return d;
}

DriverPoint Driver::sample(Rng& rng) const {
  DriverPoint w;
  if (kind_ == Kind::rotation) {
    w.angle = rng.uniform();
    return w;
  }
  w.window.push_back(draw(chain_->stationary(), rng));
  while (static_cast<int>(w.window.size()) < window_)
    w.window.push_back(draw(chain_->stochastic().row(w.window.back()).transpose(), rng));
  return w;
}

DriverPoint Driver::step(const DriverPoint& w, Rng& rng) const {
  DriverPoint next;
  if (kind_ == Kind::rotation) {
    next.angle = frac(w.angle + alpha_);
    return next;
  }
  require(static_cast<int>(w.window.size()) == window_, "driver point has the wrong window");
  next.window.assign(w.window.begin() + 1, w.window.end());
  next.window.push_back(draw(chain_->stochastic().row(w.window.back()).transpose(), rng));
  return next;
}

std::vector<DriverPoint> driver_orbit(const Driver& d, const DriverPoint& omega0, int n,
                                      std::uint64_t seed) {
  require(n >= 1, "driver orbit length must be at least 1");
  Rng rng(seed);
  std::vector<DriverPoint> out{omega0};
  while (static_cast<int>(out.size()) < n) out.push_back(d.step(out.back(), rng));
  return out;
}

MarginalCheck driver_marginal_check(const Driver& d, std::span<const DriverPoint> sample,
                                    int bins) {
  require(!sample.empty(), "marginal check needs samples");
  std::vector<double> expected;
  std::vector<double> observed;
  const auto total = static_cast<double>(sample.size());
  if (d.kind() == Driver::Kind::rotation) {
    require(bins >= 2, "need at least two bins");
    observed.assign(static_cast<std::size_t>(bins), 0.0);
    expected.assign(static_cast<std::size_t>(bins), total / bins);
    for (const auto& w : sample)
      observed[std::min<std::size_t>(static_cast<std::size_t>(w.angle * bins),
                                     static_cast<std::size_t>(bins - 1))] += 1.0;
  } else {
    const auto& pi = d.chain()->stationary();
    observed.assign(static_cast<std::size_t>(pi.size()), 0.0);
    for (Eigen::Index s = 0; s < pi.size(); ++s) expected.push_back(total * pi(s));
    for (const auto& w : sample) observed[static_cast<std::size_t>(w.window.front())] += 1.0;
  }
  MarginalCheck out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    out.statistic += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    ++out.dof;
  }
  out.dof = std::max(1, out.dof - 1);
  out.pass = std::abs(out.statistic - out.dof) <= 4.0 * std::sqrt(2.0 * out.dof);
  return out;
}

SymbolicBundle::SymbolicBundle(Driver driver, SymbolicSystem system, Measure base, Twist twist)
    : driver_(std::move(driver)), system_(std::move(system)), base_(std::move(base)), twist_(twist) {
  check_support(base_, system_.source());
  columns_ = system_.code().fibers();
  position_.assign(static_cast<std::size_t>(system_.source().size()), 0);
  for (const auto& col : columns_) {
    for (std::size_t i = 0; i < col.size(); ++i) position_[static_cast<std::size_t>(col[i])] = static_cast<int>(i);
    period_ = std::lcm(period_, static_cast<int>(col.size()));
  }
  if (twist_ == Twist::relabel)
    require(system_.source().is_full(), "relabeled fibers need a full-shift source");
}

int SymbolicBundle::twist_of(const DriverPoint& w) const {
  if (twist_ == Twist::constant) return 0;
  if (driver_.kind() == Driver::Kind::rotation)
    return std::min(period_ - 1, static_cast<int>(std::floor(w.angle * period_)));
  return w.window.front();
}

std::vector<Symbol> SymbolicBundle::relabeling(int r) const {
  std::vector<Symbol> perm(position_.size());
  const FactorCode& code = system_.code();
  for (std::size_t s = 0; s < perm.size(); ++s) {
    const auto& col = columns_[static_cast<std::size_t>(code(static_cast<Symbol>(s)))];
    const auto n = static_cast<int>(col.size());
    perm[s] = col[static_cast<std::size_t>(((position_[s] + r) % n + n) % n)];
  }
  return perm;
}

Measure SymbolicBundle::fiber_measure(const DriverPoint& w) const {
  const auto perm = relabeling(twist_of(w));
  if (const auto* b = std::get_if<BernoulliMeasure>(&base_)) {
    std::vector<double> p(perm.size());
    for (std::size_t s = 0; s < perm.size(); ++s) p[static_cast<std::size_t>(perm[s])] = (*b)[static_cast<Symbol>(s)];
    return BernoulliMeasure(std::move(p));
  }
  const auto& m = std::get<MarkovMeasure>(base_);
  const auto n = static_cast<Eigen::Index>(perm.size());
  Eigen::MatrixXd p(n, n);
  Eigen::VectorXd pi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pi(perm[static_cast<std::size_t>(i)]) = m.stationary(static_cast<Symbol>(i));
    for (Eigen::Index j = 0; j < n; ++j)
      p(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) =
          m.transition(static_cast<Symbol>(i), static_cast<Symbol>(j));
  }
  return MarkovMeasure(std::move(p), std::move(pi));
}

Word SymbolicBundle::fiber_map(const DriverPoint& w, const DriverPoint& next,
                               std::span<const Symbol> x) const {
  require(!x.empty(), "fiber map needs a nonempty word");
  const auto from = relabeling(twist_of(w));
  const auto to = relabeling(twist_of(next));
  std::vector<Symbol> inverse(from.size());
  for (std::size_t s = 0; s < from.size(); ++s) inverse[static_cast<std::size_t>(from[s])] = static_cast<Symbol>(s);
  Word out;
  out.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i)
    out.push_back(to[static_cast<std::size_t>(inverse[static_cast<std::size_t>(x[i])])]);
  return out;
}

TorusBundle::TorusBundle(Driver driver, int m1, int m2, SkewFunction phi, Shift shift, double c)
    : driver_(std::move(driver)), m1_(m1), m2_(m2), phi_(std::move(phi)), shift_(shift), c_(c) {
  require(m1_ >= 2 && m2_ >= m1_, "torus fiber needs 2 <= m1 <= m2");
  if (shift_ == Shift::angle)
    require(driver_.kind() == Driver::Kind::rotation, "c(omega) = omega needs a rotation driver");
}

double TorusBundle::shift_of(const DriverPoint& w) const {
  switch (shift_) {
    case Shift::zero: return 0.0;
    case Shift::constant: return c_;
    case Shift::angle: return w.angle;
  }
  return 0.0;
}

TorusPoint TorusBundle::fiber_map(const DriverPoint& w, TorusPoint x) const {
  return {frac(m1_ * x.x1), frac(m2_ * x.x2 + phi_(x.x1) + shift_of(w))};
}

SkewState<Word> skew_product_step(const SymbolicBundle& b, const SkewState<Word>& s, Rng& rng) {
  DriverPoint next = b.driver().step(s.omega, rng);
  Word x = b.fiber_map(s.omega, next, s.x);
  return {std::move(next), std::move(x)};
}

SkewState<TorusPoint> skew_product_step(const TorusBundle& b, const SkewState<TorusPoint>& s,
                                        Rng& rng) {
  return {b.driver().step(s.omega, rng), b.fiber_map(s.omega, s.x)};
}

Word fiber_iterate(const SymbolicBundle& b, std::span<const DriverPoint> orbit,
                   std::span<const Symbol> x, int n) {
  require(n >= 0 && static_cast<int>(orbit.size()) >= n + 1, "driver orbit too short");
  require(static_cast<int>(x.size()) > n, "word too short for the iterate");
  Word y(x.begin(), x.end());
  for (int j = 0; j < n; ++j) y = b.fiber_map(orbit[static_cast<std::size_t>(j)], orbit[static_cast<std::size_t>(j) + 1], y);
  return y;
}

TorusPoint fiber_iterate(const TorusBundle& b, std::span<const DriverPoint> orbit, TorusPoint x,
                         int n) {
  require(n >= 0 && static_cast<int>(orbit.size()) >= n, "driver orbit too short");
  for (int j = 0; j < n; ++j) x = b.fiber_map(orbit[static_cast<std::size_t>(j)], x);
  return x;
}

TorusPoint fiber_iterate_direct(const TorusBundle& b, std::span<const DriverPoint> orbit,
                                TorusPoint x, int n) {
  require(n >= 0 && static_cast<int>(orbit.size()) >= n, "driver orbit too short");
  long double x2 = x.x2;
  double x1 = x.x1;
  std::vector<long double> terms;
  for (int i = 0; i < n; ++i) {
    terms.push_back(static_cast<long double>(b.phi()(x1)) + b.shift_of(orbit[static_cast<std::size_t>(i)]));
    x1 = frac(b.m1() * x1);
  }
  long double power = 1.0L;
  long double sum = 0.0L;
  for (int i = n; i-- > 0;) {
    sum += power * terms[static_cast<std::size_t>(i)];
    power *= b.m2();
  }
  long double v = power * x2 + sum;
  v -= std::floor(v);
  return {x1, v >= 1.0L ? 0.0 : static_cast<double>(v)};
}

double torus_distance(TorusPoint p, TorusPoint q) {
  auto circ = [](double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 1.0 - d);
  };
  return std::max(circ(p.x1, q.x1), circ(p.x2, q.x2));
}

double disintegration_residual(const SymbolicBundle& b, const DriverPoint& w,
                               const DriverPoint& next, int length) {
  const Sft& sft = b.system().source();
  require(length >= 1, "residual word length must be positive");
  require(std::pow(static_cast<double>(sft.size()), length + 1) <= 1 << 20,
          "residual word length too large");
  const Measure mu = b.fiber_measure(w);
  const Measure mu_next = b.fiber_measure(next);
  const auto from = b.relabeling(b.twist_of(w));
  const auto to = b.relabeling(b.twist_of(next));
  std::vector<Symbol> to_inverse(to.size());
  for (std::size_t s = 0; s < to.size(); ++s) to_inverse[static_cast<std::size_t>(to[s])] = static_cast<Symbol>(s);
  const FactorCode& code = b.system().code();
  double worst = 0.0;
  Word word(static_cast<std::size_t>(length), 0);
  for (;;) {
    if (sft.admissible(word)) {
      const double target = weighted_cylinder_measure(mu_next, code, word, length, length);
      // f^{-1}[w] = union over c of [c v], v = rho_r rho_{r'}^{-1} w.
      Word pre(static_cast<std::size_t>(length) + 1);
      for (int i = 0; i < length; ++i)
        pre[static_cast<std::size_t>(i) + 1] =
            from[static_cast<std::size_t>(to_inverse[static_cast<std::size_t>(word[static_cast<std::size_t>(i)])])];
      double source = 0.0;
      for (Symbol c = 0; c < sft.size(); ++c) {
        pre[0] = c;
        if (sft.admissible(pre)) source += weighted_cylinder_measure(mu, code, pre, length + 1, length + 1);
      }
      worst = std::max(worst, std::abs(target - source));
    }
    int pos = length - 1;
    while (pos >= 0 && ++word[static_cast<std::size_t>(pos)] == sft.size()) word[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  return worst;
}

FiberEntropyReport fiber_katok_entropy(const SymbolicBundle& b, const WeightVector& a,
                                       int omega_samples, int k, std::span<const int> n_grid,
                                       double delta, std::uint64_t seed) {
  require(omega_samples >= 1, "need at least one omega sample");
  Rng start(derive_seed(seed, 0));
  const DriverPoint omega0 = b.driver().sample(start);
  const auto orbit = driver_orbit(b.driver(), omega0, omega_samples, derive_seed(seed, 1));
  FiberEntropyReport report;
  for (const auto& w : orbit)
    report.fibers.push_back(
        {w, b.twist_of(w), katok_entropy_estimate(b.system(), b.fiber_measure(w), a, k, n_grid, delta)});
  std::sort(report.fibers.begin(), report.fibers.end(), [](const FiberEstimate& x, const FiberEstimate& y) {
    return x.omega.angle != y.omega.angle ? x.omega.angle < y.omega.angle : x.omega.window < y.omega.window;
  });
  double lo = report.fibers.front().estimate.slope;
  double hi = lo;
  double sum = 0.0;
  for (const auto& f : report.fibers) {
    sum += f.estimate.slope;
    lo = std::min(lo, f.estimate.slope);
    hi = std::max(hi, f.estimate.slope);
  }
  const double n = static_cast<double>(report.fibers.size());
  report.mean = sum / n;
  report.spread = hi - lo;
  if (report.fibers.size() > 1) {
    double ss = 0.0;
    for (const auto& f : report.fibers) ss += (f.estimate.slope - report.mean) * (f.estimate.slope - report.mean);
    report.stddev = std::sqrt(ss / (n - 1.0));
  }
  return report;
}

FrostmanReport frostman_check(const SymbolicSystem& system, const Measure& m,
                              const WeightVector& a, double s, int k, int n_min, int n_max,
                              std::size_t sample_count, std::uint64_t seed) {
  require(s >= 0.0, "Frostman exponent must be nonnegative");
  require(n_min >= 1 && n_max >= n_min, "need 1 <= n_min <= n_max");
  require(sample_count >= 1, "need at least one sample");
  check_support(m, system.source());
  FrostmanReport r;
  r.samples = sample_count;
  r.n_min = n_min;
  r.n_max = n_max;
  r.max_log_ratio = -std::numeric_limits<double>::infinity();
  r.per_order.assign(static_cast<std::size_t>(n_max - n_min + 1), 0);
  const int length = ball_spec(a, n_max, k).len2;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const Word x = sample_trajectory(m, length, derive_seed(seed, i));
    bool any = false;
    for (int n = n_min; n <= n_max; ++n) {
      const auto spec = ball_spec(a, n, k);
      const double ratio =
          weighted_cylinder_log_measure(m, system.code(), x, spec.len1, spec.len2) + s * n;
      r.max_log_ratio = std::max(r.max_log_ratio, ratio);
      if (ratio > 1e-12) {
        ++r.violations;
        ++r.per_order[static_cast<std::size_t>(n - n_min)];
        any = true;
      }
    }
    if (any) ++r.points_violating;
  }
  return r;
}

}  // namespace wbe
