#pragma once

// Empirical checks of the weighted SMB, Brin-Katok and Katok limits, and the
// chain rule for conditional information functions.

#include <cstdint>
#include <span>
#include <vector>

#include "wbe/measures.hpp"
#include "wbe/symbolic.hpp"
#include "wbe/weighted_entropy.hpp"

namespace wbe {

struct ConvergenceSeries {
  std::vector<int> ns;
  std::vector<double> values;
  std::vector<double> ci_halfwidth;
  EntropyInterval target;
};

/// Min, max and mean over the final third of the grid (at least one point).
struct TailSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double gap() const { return max - min; }
};

TailSummary tail_summary(std::span<const double> values);

struct SmbResult {
  ConvergenceSeries series;
  /// max over trajectories of (1/m) log Z_m at the largest m, where
  /// Z_m = nu(C_m)/mu(C_m) and nu is the independent approximation of mu
  /// with the same one-symbol marginals. E[Z_m] <= 1, so this is <= o(1).
  double zm_max = 0.0;
};

/// -(1/N) log mu of the weighted join cylinder along sampled trajectories;
/// the CI half-width is 3 sd / sqrt(trajectories).
SmbResult smb_series(const Measure& m, const FactorCode& code, const WeightVector& a,
                     std::span<const int> n_grid, int trajectories, std::uint64_t seed);

struct BrinKatokResult {
  ConvergenceSeries series;     // mean over points
  TailSummary tail;             // of the mean series
  double point_tail_gap = 0.0;  // largest per-point tail gap
};

BrinKatokResult brin_katok_series(const Measure& m, const FactorCode& code, const WeightVector& a,
                                  int k, std::span<const int> n_grid, int points,
                                  std::uint64_t seed);

struct KatokDeltaReport {
  std::vector<double> deltas;
  std::vector<KatokEstimate> estimates;
  double max_pairwise = 0.0;
  bool pass = false;
};

KatokDeltaReport katok_delta_report(const SymbolicSystem& system, const Measure& m,
                                    const WeightVector& a, int k, std::span<const int> n_grid,
                                    std::span<const double> deltas, double tolerance);

/// The partition by the symbols on [begin, end), or by their code images when
/// `factor` is set. An empty window is the trivial partition.
struct CylinderPartition {
  int begin = 0;
  int end = 0;
  bool factor = false;
};

struct ChainRuleReport {
  std::size_t atoms = 0;
  double max_residual = 0.0;
  bool pass = false;  // max_residual <= 1e-10
};

/// Checks I(alpha v beta | A) = I(alpha | A) + I(beta | alpha v A) on every
/// atom of alpha v beta v A of positive measure.
ChainRuleReport chain_rule_check(const Measure& m, const FactorCode& code,
                                 const CylinderPartition& alpha, const CylinderPartition& beta,
                                 const CylinderPartition& given);

}  // namespace wbe
