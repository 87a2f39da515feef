#pragma once

// Bernoulli and Markov measures on symbolic systems: entropy rates, exact
// weighted cylinder measures, pushforwards and sampling. Natural log throughout.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wbe/symbolic.hpp"

namespace wbe {

/// Tolerance on sum-to-one and row-sum checks. Matches the measure file format
/// so anything accepted by the parser is a valid measure.
inline constexpr double kProbabilityTolerance = 1e-9;

class BernoulliMeasure {
 public:
  explicit BernoulliMeasure(std::vector<double> probs);
  static BernoulliMeasure uniform(int size);

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](Symbol s) const { return probs_[static_cast<std::size_t>(s)]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

class MarkovMeasure {
 public:
  /// Stationary vector computed from the stochastic matrix.
  explicit MarkovMeasure(Eigen::MatrixXd stochastic);
  MarkovMeasure(Eigen::MatrixXd stochastic, Eigen::VectorXd stationary);
  static MarkovMeasure from_bernoulli(const BernoulliMeasure& b);

  int size() const { return static_cast<int>(stochastic_.rows()); }
  double transition(Symbol i, Symbol j) const { return stochastic_(i, j); }
  double stationary(Symbol i) const { return stationary_(i); }
  const Eigen::MatrixXd& stochastic() const { return stochastic_; }
  const Eigen::VectorXd& stationary() const { return stationary_; }

 private:
  Eigen::MatrixXd stochastic_;
  Eigen::VectorXd stationary_;
};

using Measure = std::variant<BernoulliMeasure, MarkovMeasure>;

int measure_size(const Measure& m);

/// Closed interval [lower, upper] of nonnegative reals.
struct EntropyInterval {
  double lower = 0.0;
  double upper = 0.0;

  EntropyInterval() = default;
  EntropyInterval(double lo, double hi);
  static EntropyInterval exact(double v) { return {v, v}; }

  bool is_exact() const { return lower == upper; }
  double mid() const { return 0.5 * (lower + upper); }
  double width() const { return upper - lower; }
  bool contains(double v, double slack = 0.0) const {
    return v >= lower - slack && v <= upper + slack;
  }
};

/// -sum p log p with 0 log 0 = 0.
double shannon_entropy(std::span<const double> probs);

double bernoulli_entropy(const BernoulliMeasure& m);
double markov_entropy(const MarkovMeasure& m);
double measure_entropy(const Measure& m);

/// Left fixed probability vector of a row-stochastic matrix: direct solve of
/// pi (P - I) = 0, sum pi = 1, falling back to averaged power iteration.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& stochastic);

/// log of the spectral radius of the adjacency matrix.
double topological_entropy(const Sft& sft);
/// Measure of maximal entropy of an irreducible SFT.
MarkovMeasure parry_measure(const Sft& sft);

/// Throws InvalidInput if the measure charges a word forbidden by the SFT.
void check_support(const Measure& m, const Sft& sft);

BernoulliMeasure pushforward_bernoulli(const BernoulliMeasure& m, const FactorCode& code);

struct HiddenFactorBounds {
  EntropyInterval interval;
  int k_reached = 0;
  bool converged = false;
};

/// Conditional-entropy sandwich for the entropy rate of Y = code(X):
///   H(Y_{k+1} | Y_2..Y_k, X_1) <= h(Y) <= H(Y_{k+1} | Y_1..Y_k).
/// Stops at the first k with gap < tol, at k_max, or when the number of
/// factor words would exceed word_cap.
HiddenFactorBounds hidden_markov_entropy_bounds(const MarkovMeasure& m, const FactorCode& code,
                                                int k_max, double tol,
                                                std::size_t word_cap = std::size_t{1} << 20);

/// Entropy rate of code(X): exact for Bernoulli measures and injective codes,
/// bracketed otherwise.
EntropyInterval factor_entropy(const Measure& m, const FactorCode& code, int k_max = 14,
                               double tol = 1e-10);

/// a1 h(m) + a2 h(m o code^-1).
EntropyInterval weighted_measure_entropy(const WeightVector& a, const Measure& m,
                                         const FactorCode& code);

/// Exact measure of {y : y[0,len1) = center[0,len1), code(y)[len1,len2) = code(center)[len1,len2)}.
double weighted_cylinder_measure(const Measure& m, const FactorCode& code,
                                 std::span<const Symbol> center, int len1, int len2);
/// Same quantity in log space, stable for windows of thousands of symbols.
double weighted_cylinder_log_measure(const Measure& m, const FactorCode& code,
                                     std::span<const Symbol> center, int len1, int len2);

inline double weighted_cylinder_measure(const Measure& m, const FactorCode& code,
                                        std::span<const Symbol> center,
                                        const WeightedBallSpec& spec) {
  return weighted_cylinder_measure(m, code, center, spec.len1, spec.len2);
}

/// log of the stationary probability that code(X) reads `tail` (at any offset).
double factor_word_log_measure(const Measure& m, const FactorCode& code,
                               std::span<const Symbol> tail);

/// Sample path of the stationary process; deterministic given the seed.
Word sample_trajectory(const Measure& m, int length, std::uint64_t seed);

Measure parse_measure_file(std::string_view text);
std::string format_measure_file(const Measure& m);
Measure load_measure(const std::string& path);

}  // namespace wbe
