#pragma once

// Bedford-McMullen carpets on the 2-torus: weights, the dimension formula,
// digit coding of points, skew-product orbits and box counting.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbe/symbolic.hpp"
#include "wbe/variational.hpp"

namespace wbe {

struct Digit {
  int i = 0;  // column, base m1
  int j = 0;  // row, base m2

  friend bool operator==(const Digit&, const Digit&) = default;
  friend auto operator<=>(const Digit&, const Digit&) = default;
};

class CarpetSpec {
 public:
  /// Digits are stored sorted and deduplicated; symbol d of the coding is digits()[d].
  CarpetSpec(int m1, int m2, std::vector<Digit> digits);

  int m1() const { return m1_; }
  int m2() const { return m2_; }
  const std::vector<Digit>& digits() const { return digits_; }
  /// Index of a digit in digits(), or -1.
  int index_of(Digit d) const;
  /// N_i for every column i in [0, m1), including empty ones.
  std::vector<int> column_counts() const;
  /// Fibers of the occupied columns, in column order.
  ColumnStructure columns() const;

 private:
  int m1_;
  int m2_;
  std::vector<Digit> digits_;
};

/// (1/log m2, 1/log m1 - 1/log m2).
WeightVector carpet_weights(const CarpetSpec& spec);

/// log_{m1} sum_i N_i^{log m1 / log m2}. Throws InvariantViolation if the value
/// disagrees with the variational closed form under carpet_weights.
double carpet_dimension(const CarpetSpec& spec);

/// a1 log(m1 m2) + a2 log m1 under carpet_weights; equal to 2.
double torus_weighted_entropy(int m1, int m2);

/// Full shift on the digits with the column code.
SymbolicSystem carpet_system(const CarpetSpec& spec);

struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// x1 = sum i_k m1^{-k-1}, x2 = sum j_k m2^{-k-1}, reduced into [0,1).
TorusPoint encode_point(const CarpetSpec& spec, std::span<const Symbol> word);
/// The points coded by word, word shifted once, ..., for `length` shifts.
std::vector<TorusPoint> encode_orbit(const CarpetSpec& spec, std::span<const Symbol> word,
                                     int length);
/// First `depth` digit pairs of the expansions that do not end in all (m-1)s.
std::vector<Digit> decode_point(const CarpetSpec& spec, TorusPoint p, int depth);
/// decode_point as symbols; throws InvalidInput on a digit outside the spec.
Word decode_word(const CarpetSpec& spec, TorusPoint p, int depth);

/// phi: [0,1) -> R from a small named family.
class SkewFunction {
 public:
  static SkewFunction zero();
  static SkewFunction constant(double c);
  static SkewFunction linear(double slope, double intercept);
  /// Piecewise linear through (xs[i], ys[i]); xs strictly increasing in [0,1].
  static SkewFunction tabulated(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Iterates (x1,x2) -> (m1 x1, m2 x2 + phi(x1)) mod 1; returns n+1 points.
std::vector<TorusPoint> skew_orbit(const CarpetSpec& spec, const SkewFunction& phi, TorusPoint p0,
                                   int n);

/// Points coded by seeded uniform digit words of the given depth.
std::vector<TorusPoint> sample_carpet_points(const CarpetSpec& spec, std::size_t count, int depth,
                                             std::uint64_t seed);

struct BoxCountRow {
  int k = 0;
  int l = 0;            // base-m2 digits, round(k log m1 / log m2)
  double log_inv_delta = 0.0;
  std::uint64_t occupied = 0;
};

struct BoxCountResult {
  double dimension = 0.0;
  std::vector<BoxCountRow> rows;
};

/// Approximate-square box counting: boxes of side m1^{-k} by m2^{-l}, fitted
/// against the log of the inverse geometric-mean side.
BoxCountResult box_counting_dimension(std::span<const TorusPoint> sample, int m1, int m2,
                                      std::span<const int> scales);

CarpetSpec parse_carpet_file(std::string_view text);
std::string format_carpet_file(const CarpetSpec& spec);
CarpetSpec load_carpet(const std::string& path);

/// "x1,x2" header then one row per point, 17 significant digits.
std::string format_points_csv(std::span<const TorusPoint> points);

}  // namespace wbe
