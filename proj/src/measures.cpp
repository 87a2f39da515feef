#include "wbe/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "wbe/errors.hpp"
#include "wbe/rng.hpp"

namespace wbe {

namespace {

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

void check_probability_vector(std::span<const double> probs, const std::string& what) {
  require(!probs.empty(), what + " must be nonempty");
  double sum = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, what + " entries must be nonnegative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= kProbabilityTolerance,
          what + " must sum to 1 (got " + std::to_string(sum) + ")");
}

bool strongly_connected(const Sft& sft) {
  const int n = sft.size();
  auto reach_all = [&](bool forward) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        bool edge = forward ? sft.allowed(i, j) : sft.allowed(j, i);
        if (edge && !seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return reach_all(true) && reach_all(false);
}

Eigen::MatrixXd adjacency(const Sft& sft) {
  const int n = sft.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (sft.allowed(i, j)) a(i, j) = 1.0;
  return a;
}

// Perron eigenpair of a nonnegative irreducible matrix.
std::pair<double, Eigen::VectorXd> perron_vector(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
  const auto& values = solver.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values(i).real() > values(best).real()) best = i;
  Eigen::VectorXd v = solver.eigenvectors().col(best).real();
  if (v.sum() < 0) v = -v;
  v = v.cwiseMax(0.0);
  v /= v.sum();
  return {values(best).real(), v};
}

}  // namespace

BernoulliMeasure::BernoulliMeasure(std::vector<double> probs) : probs_(std::move(probs)) {
  check_probability_vector(probs_, "Bernoulli probabilities");
}

BernoulliMeasure BernoulliMeasure::uniform(int size) {
  require(size >= 1, "alphabet size must be at least 1");
  return BernoulliMeasure(std::vector<double>(static_cast<std::size_t>(size), 1.0 / size));
}

MarkovMeasure::MarkovMeasure(Eigen::MatrixXd stochastic)
    : MarkovMeasure(stochastic, stationary_distribution(stochastic)) {}

MarkovMeasure::MarkovMeasure(Eigen::MatrixXd stochastic, Eigen::VectorXd stationary)
    : stochastic_(std::move(stochastic)), stationary_(std::move(stationary)) {
  require(stochastic_.rows() >= 1 && stochastic_.rows() == stochastic_.cols(),
          "stochastic matrix must be square and nonempty");
  require(stationary_.size() == stochastic_.rows(), "stationary vector has the wrong length");
  for (Eigen::Index i = 0; i < stochastic_.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(stochastic_.cols()));
    for (Eigen::Index j = 0; j < stochastic_.cols(); ++j) row[j] = stochastic_(i, j);
    check_probability_vector(row, "row " + std::to_string(i) + " of the stochastic matrix");
  }
  std::vector<double> pi(stationary_.data(), stationary_.data() + stationary_.size());
  check_probability_vector(pi, "stationary vector");
  const double residual = (stationary_.transpose() * stochastic_ - stationary_.transpose())
                              .cwiseAbs()
                              .maxCoeff();
  require(residual <= 1e-10, "stationary vector is not fixed by the stochastic matrix");
}

MarkovMeasure MarkovMeasure::from_bernoulli(const BernoulliMeasure& b) {
  const int n = b.size();
  Eigen::MatrixXd p(n, n);
  Eigen::VectorXd pi(n);
  for (int j = 0; j < n; ++j) pi(j) = b[j];
  for (int i = 0; i < n; ++i) p.row(i) = pi.transpose();
  return MarkovMeasure(std::move(p), std::move(pi));
}

int measure_size(const Measure& m) {
  return std::visit([](const auto& x) { return x.size(); }, m);
}

EntropyInterval::EntropyInterval(double lo, double hi) : lower(lo), upper(hi) {
  if (!(lo <= hi)) throw InvariantViolation("entropy interval with lower > upper");
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h -= xlogx(p);
  return h;
}

double bernoulli_entropy(const BernoulliMeasure& m) { return shannon_entropy(m.probs()); }

double markov_entropy(const MarkovMeasure& m) {
  double h = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    double row = 0.0;
    for (int j = 0; j < m.size(); ++j) row -= xlogx(m.transition(i, j));
    h += m.stationary(i) * row;
  }
  return h;
}

double measure_entropy(const Measure& m) {
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) return bernoulli_entropy(*b);
  return markov_entropy(std::get<MarkovMeasure>(m));
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& stochastic) {
  const Eigen::Index n = stochastic.rows();
  require(n >= 1 && stochastic.cols() == n, "stochastic matrix must be square and nonempty");
  Eigen::MatrixXd system = stochastic.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (lu.isInvertible()) {
    Eigen::VectorXd pi = lu.solve(rhs);
    const double residual = (pi.transpose() * stochastic - pi.transpose()).cwiseAbs().maxCoeff();
    if (pi.minCoeff() > -1e-12 && residual <= 1e-12) {
      pi = pi.cwiseMax(0.0);
      return pi / pi.sum();
    }
  }
  // Reducible or periodic chains: Cesaro-averaged power iteration.
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(n);
  const int iterations = 200000;
  for (int t = 0; t < iterations; ++t) {
    avg += v;
    v = v * stochastic;
  }
  avg /= avg.sum();
  for (int refine = 0; refine < 1000; ++refine) {
    Eigen::RowVectorXd next = 0.5 * (avg + avg * stochastic);
    if ((next - avg).cwiseAbs().maxCoeff() < 1e-15) break;
    avg = next;
  }
  return avg.transpose();
}

double topological_entropy(const Sft& sft) {
  return std::log(perron_vector(adjacency(sft)).first);
}

MarkovMeasure parry_measure(const Sft& sft) {
  require(strongly_connected(sft), "Parry measure requires an irreducible SFT");
  const Eigen::MatrixXd a = adjacency(sft);
  const auto [lambda, right] = perron_vector(a);
  const auto [lambda_t, left] = perron_vector(a.transpose());
  (void)lambda_t;
  const int n = sft.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (sft.allowed(i, j)) p(i, j) = right(j) / (lambda * right(i));
    p.row(i) /= p.row(i).sum();
  }
  Eigen::VectorXd pi = left.cwiseProduct(right);
  pi /= pi.sum();
  // One power step removes eigen-solver rounding from the fixed-point check.
  for (int t = 0; t < 4; ++t) {
    Eigen::VectorXd next = (pi.transpose() * p).transpose();
    pi = next / next.sum();
  }
  return MarkovMeasure(std::move(p), std::move(pi));
}

void check_support(const Measure& m, const Sft& sft) {
  require(measure_size(m) == sft.size(), "measure alphabet does not match the system");
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) {
    for (int i = 0; i < sft.size(); ++i)
      for (int j = 0; j < sft.size(); ++j)
        if ((*b)[i] > 0 && (*b)[j] > 0 && !sft.allowed(i, j))
          throw InvalidInput("Bernoulli measure charges forbidden word " + std::to_string(i) +
                             std::to_string(j));
    return;
  }
  const auto& mk = std::get<MarkovMeasure>(m);
  for (int i = 0; i < sft.size(); ++i)
    for (int j = 0; j < sft.size(); ++j)
      if (mk.transition(i, j) > 0 && !sft.allowed(i, j))
        throw InvalidInput("Markov measure charges forbidden word " + std::to_string(i) +
                           std::to_string(j));
}

BernoulliMeasure pushforward_bernoulli(const BernoulliMeasure& m, const FactorCode& code) {
  require(m.size() == code.source_size(), "measure alphabet does not match the factor code");
  std::vector<double> q(static_cast<std::size_t>(code.target_size()), 0.0);
  for (int i = 0; i < m.size(); ++i) q[code(i)] += m[i];
  double sum = 0.0;
  for (double v : q) sum += v;
  for (double& v : q) v /= sum;
  return BernoulliMeasure(std::move(q));
}

namespace {

// Entropy of the distribution of factor words of a given length, where the
// forward vector alpha(j) = P(word so far, current state = j).
struct WordEntropy {
  const MarkovMeasure& m;
  const FactorCode& code;
  std::vector<std::vector<Symbol>> fibers;
  int length;
  double entropy = 0.0;
  std::size_t words = 0;

  void walk(const Eigen::VectorXd& alpha, int depth) {
    if (depth == length) {
      const double p = alpha.sum();
      entropy -= xlogx(p);
      ++words;
      return;
    }
    for (std::size_t c = 0; c < fibers.size(); ++c) {
      Eigen::VectorXd next = Eigen::VectorXd::Zero(alpha.size());
      double mass = 0.0;
      for (Symbol j : fibers[c]) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < alpha.size(); ++i) v += alpha(i) * m.transition(i, j);
        next(j) = v;
        mass += v;
      }
      if (mass > 0.0) walk(next, depth + 1);
    }
  }
};

// H(Y_1..Y_len) for the stationary process.
double block_entropy(const MarkovMeasure& m, const FactorCode& code, int len) {
  if (len == 0) return 0.0;
  WordEntropy w{m, code, code.fibers(), len};
  for (std::size_t c = 0; c < w.fibers.size(); ++c) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m.size());
    double mass = 0.0;
    for (Symbol j : w.fibers[c]) {
      alpha(j) = m.stationary(j);
      mass += alpha(j);
    }
    if (mass > 0.0) w.walk(alpha, 1);
  }
  return w.entropy;
}

// H(Y_2..Y_len | X_1).
double conditional_block_entropy(const MarkovMeasure& m, const FactorCode& code, int len) {
  if (len <= 1) return 0.0;
  double total = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    if (m.stationary(i) <= 0.0) continue;
    WordEntropy w{m, code, code.fibers(), len - 1};
    Eigen::VectorXd start = Eigen::VectorXd::Zero(m.size());
    start(i) = 1.0;
    w.walk(start, 0);
    total += m.stationary(i) * w.entropy;
  }
  return total;
}

}  // namespace

HiddenFactorBounds hidden_markov_entropy_bounds(const MarkovMeasure& m, const FactorCode& code,
                                                int k_max, double tol, std::size_t word_cap) {
  require(k_max >= 1, "k_max must be at least 1");
  require(m.size() == code.source_size(), "measure alphabet does not match the factor code");
  HiddenFactorBounds out;
  double best_lower = 0.0;
  double best_upper = std::numeric_limits<double>::infinity();
  const double alphabet = static_cast<double>(code.target_size());
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1 && std::pow(alphabet, k + 1) > static_cast<double>(word_cap)) break;
    const double upper = block_entropy(m, code, k + 1) - block_entropy(m, code, k);
    const double lower =
        conditional_block_entropy(m, code, k + 1) - conditional_block_entropy(m, code, k);
    best_upper = std::min(best_upper, std::max(upper, 0.0));
    best_lower = std::max(best_lower, std::max(lower, 0.0));
    best_lower = std::min(best_lower, best_upper);
    out.k_reached = k;
    if (best_upper - best_lower < tol) {
      out.converged = true;
      break;
    }
  }
  out.interval = EntropyInterval(best_lower, best_upper);
  return out;
}

EntropyInterval factor_entropy(const Measure& m, const FactorCode& code, int k_max, double tol) {
  if (const auto* b = std::get_if<BernoulliMeasure>(&m))
    return EntropyInterval::exact(bernoulli_entropy(pushforward_bernoulli(*b, code)));
  const auto& mk = std::get<MarkovMeasure>(m);
  if (code.injective()) return EntropyInterval::exact(markov_entropy(mk));
  return hidden_markov_entropy_bounds(mk, code, k_max, tol).interval;
}

EntropyInterval weighted_measure_entropy(const WeightVector& a, const Measure& m,
                                         const FactorCode& code) {
  require(measure_size(m) == code.source_size(), "measure alphabet does not match the factor code");
  const double h = measure_entropy(m);
  const EntropyInterval hf = factor_entropy(m, code);
  if (hf.is_exact()) return EntropyInterval::exact(a.a1() * h + a.a2() * hf.lower);
  return {a.a1() * h + a.a2() * hf.lower, a.a1() * h + a.a2() * hf.upper};
}

double weighted_cylinder_log_measure(const Measure& m, const FactorCode& code,
                                     std::span<const Symbol> center, int len1, int len2) {
  require(len1 >= 0 && len2 >= len1, "weighted cylinder windows out of order");
  require(static_cast<int>(center.size()) >= len2, "center shorter than the weighted ball window");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) {
    const BernoulliMeasure q = pushforward_bernoulli(*b, code);
    double log_mass = 0.0;
    for (int i = 0; i < len1; ++i) {
      if ((*b)[center[i]] <= 0.0) return kNegInf;
      log_mass += std::log((*b)[center[i]]);
    }
    for (int i = len1; i < len2; ++i) {
      const double qi = q[code(center[i])];
      if (qi <= 0.0) return kNegInf;
      log_mass += std::log(qi);
    }
    return log_mass;
  }
  const auto& mk = std::get<MarkovMeasure>(m);
  const int n = mk.size();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double log_scale = 0.0;
  int start = 0;
  if (len1 > 0) {
    double p = mk.stationary(center[0]);
    if (p <= 0.0) return kNegInf;
    log_scale = std::log(p);
    for (int i = 1; i < len1; ++i) {
      const double t = mk.transition(center[i - 1], center[i]);
      if (t <= 0.0) return kNegInf;
      log_scale += std::log(t);
    }
    alpha(center[len1 - 1]) = 1.0;
    start = len1;
  } else if (len2 > 0) {
    for (int j = 0; j < n; ++j)
      if (code(j) == code(center[0])) alpha(j) = mk.stationary(j);
    start = 1;
  } else {
    return 0.0;
  }
  for (int i = start; i < len2; ++i) {
    const Symbol c = code(center[i]);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (code(j) != c) continue;
      double v = 0.0;
      for (int s = 0; s < n; ++s) v += alpha(s) * mk.transition(s, j);
      next(j) = v;
    }
    const double mass = next.sum();
    if (mass <= 0.0) return kNegInf;
    alpha = next / mass;
    log_scale += std::log(mass);
  }
  return log_scale + std::log(alpha.sum());
}

double weighted_cylinder_measure(const Measure& m, const FactorCode& code,
                                 std::span<const Symbol> center, int len1, int len2) {
  return std::exp(weighted_cylinder_log_measure(m, code, center, len1, len2));
}

double factor_word_log_measure(const Measure& m, const FactorCode& code,
                               std::span<const Symbol> tail) {
  if (tail.empty()) return 0.0;
  // A representative source word with the right factor image suffices: with
  // len1 = 0 only code(center) is read.
  const auto fibers = code.fibers();
  Word rep(tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    require(tail[i] >= 0 && tail[i] < code.target_size(), "factor symbol out of range");
    rep[i] = fibers[tail[i]].front();
  }
  return weighted_cylinder_log_measure(m, code, rep, 0, static_cast<int>(rep.size()));
}

Word sample_trajectory(const Measure& m, int length, std::uint64_t seed) {
  require(length >= 1, "trajectory length must be at least 1");
  Rng rng(seed);
  auto draw = [&rng](auto&& weight, int n) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last_positive = 0;
    for (int i = 0; i < n; ++i) {
      const double w = weight(i);
      if (w <= 0.0) continue;
      last_positive = i;
      acc += w;
      if (u < acc) return i;
    }
    return last_positive;
  };
  Word out(static_cast<std::size_t>(length));
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) {
    for (auto& s : out) s = draw([&](int i) { return (*b)[i]; }, b->size());
    return out;
  }
  const auto& mk = std::get<MarkovMeasure>(m);
  out[0] = draw([&](int i) { return mk.stationary(i); }, mk.size());
  for (int t = 1; t < length; ++t) {
    const Symbol prev = out[t - 1];
    out[t] = draw([&](int j) { return mk.transition(prev, j); }, mk.size());
  }
  return out;
}

namespace {

std::vector<double> parse_reals(std::istringstream& in, const std::string& where) {
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw InvalidInput(where + ": expected a decimal, got '" + token + "'");
    out.push_back(v);
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Measure parse_measure_file(std::string_view text) {
  std::istringstream lines{std::string(text)};
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw InvalidInput("empty measure file");
  std::istringstream head(rows[0]);
  std::string kind;
  head >> kind;
  if (kind == "bernoulli") {
    if (rows.size() != 1) throw InvalidInput("bernoulli measure must be a single line");
    auto probs = parse_reals(head, "line 1");
    if (probs.empty()) throw InvalidInput("bernoulli measure needs probabilities");
    return BernoulliMeasure(std::move(probs));
  }
  if (kind == "markov") {
    std::string extra;
    if (head >> extra) throw InvalidInput("line 1: unexpected tokens after 'markov'");
    const auto n = static_cast<Eigen::Index>(rows.size() - 1);
    if (n == 0) throw InvalidInput("markov measure needs matrix rows");
    Eigen::MatrixXd p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::istringstream row(rows[static_cast<std::size_t>(i) + 1]);
      const auto values = parse_reals(row, "line " + std::to_string(i + 2));
      if (static_cast<Eigen::Index>(values.size()) != n)
        throw InvalidInput("line " + std::to_string(i + 2) + ": expected " + std::to_string(n) +
                           " entries");
      for (Eigen::Index j = 0; j < n; ++j) p(i, j) = values[static_cast<std::size_t>(j)];
    }
    return MarkovMeasure(std::move(p));
  }
  throw InvalidInput("measure file must start with 'bernoulli' or 'markov'");
}

std::string format_measure_file(const Measure& m) {
  std::string out;
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) {
    out = "bernoulli";
    for (double p : b->probs()) out += " " + format_real(p);
    return out + "\n";
  }
  const auto& mk = std::get<MarkovMeasure>(m);
  out = "markov\n";
  for (int i = 0; i < mk.size(); ++i) {
    for (int j = 0; j < mk.size(); ++j) {
      if (j) out += ' ';
      out += format_real(mk.transition(i, j));
    }
    out += '\n';
  }
  return out;
}

Measure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open measure file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_measure_file(buf.str());
}

}  // namespace wbe
