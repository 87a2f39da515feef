#pragma once

// Bundle random dynamical systems over a rotation or a Markov-shift driver,
// with symbolic fibers twisted by column relabelings and skew-carpet fibers.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbe/carpet.hpp"
#include "wbe/measures.hpp"
#include "wbe/rng.hpp"
#include "wbe/symbolic.hpp"
#include "wbe/weighted_entropy.hpp"

namespace wbe {

/// (sqrt 5 - 1)/2.
inline constexpr double kGoldenRotation = 0.61803398874989484820;
/// sqrt 2 - 1.
inline constexpr double kSilverRotation = 0.41421356237309504880;

/// A driver point: an angle for rotations, a finite future window for Markov shifts.
struct DriverPoint {
  double angle = 0.0;
  Word window;

  friend bool operator==(const DriverPoint&, const DriverPoint&) = default;
};

class Driver {
 public:
  enum class Kind { rotation, markov_shift };

  /// Any alpha in (0,1); `named` records whether it came from a named
  /// irrational constant (plain floats are rational).
  static Driver rotation(double alpha, bool named = false);
  static Driver golden_rotation() { return rotation(kGoldenRotation, true); }
  /// The chain must be irreducible and aperiodic (primitive).
  static Driver markov_shift(Eigen::MatrixXd stochastic, int window = 8);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  bool named_constant() const { return named_; }
  const std::optional<MarkovMeasure>& chain() const { return chain_; }
  int window() const { return window_; }

  /// A point distributed according to P.
  DriverPoint sample(Rng& rng) const;
  /// theta(omega). Markov shifts draw the new window symbol from rng.
  DriverPoint step(const DriverPoint& w, Rng& rng) const;

 private:
  Kind kind_ = Kind::rotation;
  double alpha_ = 0.0;
  bool named_ = false;
  std::optional<MarkovMeasure> chain_;
  int window_ = 0;
};

/// (omega0, theta omega0, ..., theta^{n-1} omega0).
std::vector<DriverPoint> driver_orbit(const Driver& d, const DriverPoint& omega0, int n,
                                      std::uint64_t seed);

/// Chi-square test of the driver marginal over `bins` cells: equal-width bins
/// for rotations, first window symbol against the stationary vector for Markov shifts.
struct MarginalCheck {
  double statistic = 0.0;
  int dof = 0;
  bool pass = false;  // |statistic - dof| <= 4 sqrt(2 dof)
};
MarginalCheck driver_marginal_check(const Driver& d, std::span<const DriverPoint> sample,
                                    int bins = 16);

/// Symbolic fiber: f_omega = rho_{r(theta omega)} o rho_{r(omega)}^{-1} o shift,
/// mu_omega = (rho_{r(omega)})_* mu, where rho_r rotates every code column by r.
class SymbolicBundle {
 public:
  enum class Twist { constant, relabel };

  SymbolicBundle(Driver driver, SymbolicSystem system, Measure base, Twist twist);

  const Driver& driver() const { return driver_; }
  const SymbolicSystem& system() const { return system_; }
  const Measure& base() const { return base_; }
  Twist twist() const { return twist_; }

  /// Rotation amount r(omega).
  int twist_of(const DriverPoint& w) const;
  /// rho_r as a symbol permutation.
  std::vector<Symbol> relabeling(int r) const;
  /// mu_omega.
  Measure fiber_measure(const DriverPoint& w) const;
  /// f_omega on a finite word; the result is one symbol shorter.
  Word fiber_map(const DriverPoint& w, const DriverPoint& next, std::span<const Symbol> x) const;

 private:
  Driver driver_;
  SymbolicSystem system_;
  Measure base_;
  Twist twist_;
  std::vector<std::vector<Symbol>> columns_;
  std::vector<int> position_;  // index of each symbol inside its column
  int period_ = 1;             // lcm of column sizes
};

/// Carpet fiber: f_omega(x) = (m1 x1, m2 x2 + phi(x1) + c(omega)) mod 1.
class TorusBundle {
 public:
  enum class Shift { zero, constant, angle };

  TorusBundle(Driver driver, int m1, int m2, SkewFunction phi, Shift shift, double c = 0.0);

  const Driver& driver() const { return driver_; }
  double shift_of(const DriverPoint& w) const;
  TorusPoint fiber_map(const DriverPoint& w, TorusPoint x) const;
  int m1() const { return m1_; }
  int m2() const { return m2_; }
  const SkewFunction& phi() const { return phi_; }

 private:
  Driver driver_;
  int m1_;
  int m2_;
  SkewFunction phi_;
  Shift shift_;
  double c_;
};

template <class Fiber>
struct SkewState {
  DriverPoint omega;
  Fiber x;
};

/// Theta(omega, x) = (theta omega, f_omega x).
SkewState<Word> skew_product_step(const SymbolicBundle& b, const SkewState<Word>& s, Rng& rng);
SkewState<TorusPoint> skew_product_step(const TorusBundle& b, const SkewState<TorusPoint>& s,
                                        Rng& rng);

/// f^n_omega along a given driver orbit (orbit[0] = omega, size >= n+1); n = 0 is the identity.
Word fiber_iterate(const SymbolicBundle& b, std::span<const DriverPoint> orbit,
                   std::span<const Symbol> x, int n);
TorusPoint fiber_iterate(const TorusBundle& b, std::span<const DriverPoint> orbit, TorusPoint x,
                         int n);
/// Closed-form x2 coordinate: m2^n x2 + sum m2^{n-1-i} (phi(x1_i) + c(theta^i omega)), mod 1.
TorusPoint fiber_iterate_direct(const TorusBundle& b, std::span<const DriverPoint> orbit,
                                TorusPoint x, int n);

/// Circular distance on the torus (max of the two coordinates).
double torus_distance(TorusPoint p, TorusPoint q);

/// max over words w of length L of |mu_{theta omega}[w] - mu_omega(f_omega^{-1}[w])|.
double disintegration_residual(const SymbolicBundle& b, const DriverPoint& w,
                               const DriverPoint& next, int length);

struct FiberEstimate {
  DriverPoint omega;
  int twist = 0;
  KatokEstimate estimate;
};

struct FiberEntropyReport {
  std::vector<FiberEstimate> fibers;  // sorted by omega
  double mean = 0.0;
  double spread = 0.0;  // max - min
  double stddev = 0.0;
};

/// Katok estimates on omega_samples fibers along a sampled driver orbit.
/// Twists are isometries of the symbolic metric that commute with the
/// factor, so the fiber weighted Bowen balls are the standard weighted
/// cylinders and only mu_omega changes with omega.
FiberEntropyReport fiber_katok_entropy(const SymbolicBundle& b, const WeightVector& a,
                                       int omega_samples, int k, std::span<const int> n_grid,
                                       double delta, std::uint64_t seed);

struct FrostmanReport {
  std::size_t samples = 0;
  int n_min = 0;
  int n_max = 0;
  std::size_t violations = 0;          // (x, n) pairs with mu(B) > e^{-sn}
  std::size_t points_violating = 0;    // x with at least one violation
  double max_log_ratio = 0.0;          // max of log mu(B) + s n
  std::vector<std::size_t> per_order;  // violations at each n in [n_min, n_max]
};

/// Samples x ~ m and checks mu(B^a(x, n, 2^-k)) <= e^{-sn} for n in [n_min, n_max].
FrostmanReport frostman_check(const SymbolicSystem& system, const Measure& m,
                              const WeightVector& a, double s, int k, int n_min, int n_max,
                              std::size_t sample_count, std::uint64_t seed);

}  // namespace wbe
