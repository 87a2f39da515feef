#pragma once

// Maximization of a1 h(mu) + a2 h(mu o pi^-1) over invariant measures.
//
// Full shifts: Bernoulli measures suffice and the optimum has a closed form.
// Proper SFTs: memory-1 Markov measures, with the factor entropy bracketed.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbe/measures.hpp"
#include "wbe/symbolic.hpp"
#include "wbe/weighted_entropy.hpp"

namespace wbe {

/// Partition of the source alphabet into the fibers of the factor code.
struct ColumnStructure {
  std::vector<std::vector<Symbol>> columns;

  static ColumnStructure from_code(const FactorCode& code);
  /// Column j holds counts[j] consecutive symbols, numbered from 0.
  static ColumnStructure from_counts(std::span<const int> counts);

  std::vector<int> counts() const;
  int alphabet_size() const;
  /// The column code: symbol -> index of its column.
  std::vector<Symbol> table() const;
};

enum class VariationalMethod { closed_form, gradient, grid, markov_search };

std::string_view method_name(VariationalMethod m);

struct VariationalResult {
  BernoulliMeasure optimizer{std::vector<double>{1.0}};
  double value = 0.0;
  VariationalMethod method = VariationalMethod::closed_form;
  bool converged = true;
  int iterations = 0;
};

/// f(p) = a1 H(p) + a2 H(q), q_j = sum of p over column j.
double variational_objective(const ColumnStructure& cols, const WeightVector& a,
                             std::span<const double> p);

/// q_j proportional to N_j^t, t = a1/(a1+a2), uniform inside each column.
VariationalResult lagrange_optimum(const ColumnStructure& cols, const WeightVector& a);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

/// Projected gradient ascent from a seeded interior start, with an exact line
/// search on the directional derivative. Stops when the gradient-map norm
/// falls below tol.
VariationalResult projected_gradient(const ColumnStructure& cols, const WeightVector& a,
                                     double tol, std::uint64_t seed, int max_iterations = 20000);

inline constexpr int kMaxGridAlphabet = 5;

/// Exhaustive maximum over the simplex grid with spacing `step`. Ties keep the
/// lexicographically first grid point.
VariationalResult grid_oracle(const ColumnStructure& cols, const WeightVector& a, double step);

/// Optimum over memory-1 Markov measures on a system; the value is an interval
/// because the factor entropy of a hidden Markov chain is only bracketed.
struct MarkovVariationalResult {
  Measure optimizer;
  EntropyInterval value;
  VariationalMethod method = VariationalMethod::closed_form;
  bool converged = true;
  int iterations = 0;
};

/// Dispatch: closed form on full shifts, Parry measure for injective codes,
/// seeded hill-climb on the certified lower bound otherwise.
MarkovVariationalResult variational_optimum(const SymbolicSystem& system, const WeightVector& a,
                                            std::uint64_t seed, int iterations = 400);

struct VariationalGapReport {
  EntropyInterval variational;  // lower end is a certified lower bound
  ExponentBracket bracket;
  double gap = 0.0;             // |bracket center - variational lower end|
  bool lower_bound_consistent = false;  // variational.lower <= s_high + slack
  double slack = 0.0;
};

VariationalGapReport variational_gap_report(const SymbolicSystem& system, const WeightVector& a,
                                            const CoverProblem& problem, double tol,
                                            std::uint64_t seed, double slack = 0.01);

}  // namespace wbe
