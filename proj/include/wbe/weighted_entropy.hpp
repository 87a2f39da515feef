#pragma once

// Caratheodory cover costs for weighted Bowen balls on symbolic systems.
//
// Every weighted Bowen ball is a weighted cylinder, and the cylinders of
// successive orders refine each other, so optimal covers of a depth-truncated
// system are found exactly by dynamic programming over the cylinder tree.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbe/measures.hpp"
#include "wbe/symbolic.hpp"

namespace wbe {

struct Ball {
  Word center;
  int order = 0;
  int resolution = 0;
};

struct Cover {
  int min_order = 1;  // declared N
  std::vector<Ball> balls;
};

/// sum_j exp(-s n_j).
double cover_cost(const Cover& cover, double s);

/// True iff every admissible word of length `depth` lies in some ball of the
/// cover and every ball has order >= cover.min_order.
bool covers_system(const SymbolicSystem& system, const WeightVector& a, const Cover& cover,
                   int depth);

struct CoverProblem {
  int resolution_k = 0;
  int min_order = 1;  // N
  int depth_cap = 12;
  /// Restricts the target set to points whose first symbol is flagged.
  std::optional<std::vector<bool>> first_symbols;
};

/// Largest order n whose ball window fits in depth_cap.
int max_order_within(const WeightVector& a, int k, int depth_cap);

/// Default N for a depth-truncated cover problem: ceil(0.8 n_max). Small N
/// lets shallow balls absorb the truncation and drags the exponent down.
int default_min_order(const WeightVector& a, int k, int depth_cap);

/// The weighted-cylinder tree of orders 0..n_max, with isomorphic subtrees
/// shared. A node is identified by (order, last prefix symbol, factor tail).
class CoverTree {
 public:
  CoverTree(const SymbolicSystem& system, const WeightVector& a, const CoverProblem& problem,
            std::size_t max_nodes = std::size_t{1} << 22);

  /// Exact minimum of cover_cost over covers by balls of order in
  /// [N, n_max] that cover the depth-cap truncation.
  double cost(double s) const;
  /// A cover attaining cost(s).
  Cover optimal_cover(double s) const;

  int max_order() const { return n_max_; }
  std::size_t node_count() const { return nodes_.size(); }
  /// Number of distinct cells at order n_max (tree leaves, not shared nodes).
  double leaf_count() const;

 private:
  struct Edge {
    int child;
    Word prefix_extension;
    Word new_tail;
  };
  struct Node {
    int order;
    std::vector<Edge> edges;
  };

  std::vector<double> evaluate(double s) const;

  const SymbolicSystem* system_;
  WeightVector a_;
  CoverProblem problem_;
  int n_max_ = 0;
  std::size_t max_nodes_;
  std::vector<Node> nodes_;  // post-order: children precede parents
  int root_ = -1;
};

/// Convenience wrapper: CoverTree(...).cost(s). Throws InvalidInput when the
/// depth cap cannot hold a ball of order N.
double min_cover_cost(const SymbolicSystem& system, const WeightVector& a, double s,
                      const CoverProblem& problem);

struct CoverSearchRecord {
  double s = 0.0;
  int depth = 0;
  double cost = 0.0;
  double elapsed_ms = 0.0;
};

struct ExponentBracket {
  double s_low = 0.0;
  double s_high = 0.0;
  double cost_low = 0.0;   // cost at s_low (>= 1 unless zero_entropy)
  double cost_high = 0.0;  // cost at s_high (< 1 unless zero_entropy)
  bool zero_entropy = false;
  std::vector<CoverSearchRecord> trace;

  double center() const { return 0.5 * (s_low + s_high); }
  double width() const { return s_high - s_low; }
};

/// Bisection on s for the crossing of min_cover_cost through 1.
ExponentBracket critical_exponent(const SymbolicSystem& system, const WeightVector& a,
                                  const CoverProblem& problem, double tol);

inline constexpr std::size_t kMaxLpConstraints = 512;
inline constexpr std::size_t kMaxLpVariables = 2048;

struct FractionalCoverResult {
  double value = 0.0;
  std::vector<Ball> balls;
  std::vector<double> weights;  // c_j, aligned with balls
};

/// Exact LP optimum of sum c_j exp(-s n_j) subject to sum c_j chi_j >= 1 on every
/// depth-cap cell. Refuses (Refusal) instances above the LP size caps.
FractionalCoverResult fractional_cover(const SymbolicSystem& system, const WeightVector& a,
                                       double s, const CoverProblem& problem);

inline double fractional_cover_cost(const SymbolicSystem& system, const WeightVector& a, double s,
                                    const CoverProblem& problem) {
  return fractional_cover(system, a, s, problem).value;
}

inline constexpr std::size_t kMaxKatokCylinders = std::size_t{1} << 16;

/// Smallest number of weighted Bowen balls of order n at resolution 2^{-k}
/// whose union has measure > 1 - delta. Bernoulli measures use exact type
/// classes; other measures enumerate cylinders (Refusal above 2^16 cells).
std::uint64_t katok_covering_number(const SymbolicSystem& system, const Measure& m,
                                    const WeightVector& a, int n, int k, double delta);

struct KatokEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<int> ns;
  std::vector<std::uint64_t> counts;
};

/// Least-squares slope of log N(n) against n.
KatokEstimate katok_entropy_estimate(const SymbolicSystem& system, const Measure& m,
                                     const WeightVector& a, int k, std::span<const int> n_grid,
                                     double delta);

/// Least-squares slope of ys against xs.
std::pair<double, double> least_squares_line(std::span<const double> xs,
                                             std::span<const double> ys);

}  // namespace wbe
