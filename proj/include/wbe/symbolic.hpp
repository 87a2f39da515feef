#pragma once

// Subshifts of finite type, one-block factor codes and weighted Bowen balls.
//
// Points of a one-sided shift are represented by finite prefixes (Word). The
// metric is d(x,y) = 2^{-min{i : x_i != y_i}}, and resolutions live on the grid
// eps = 2^{-k}. With that metric a weighted Bowen ball of order n is exactly a
// weighted cylinder: the first len1 symbols are fixed and the factor image is
// fixed on positions [len1, len2).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wbe {

using Symbol = int;
using Word = std::vector<Symbol>;

/// Description of the metric written into every output record.
inline constexpr std::string_view kMetricDescription =
    "d(x,y)=2^-min{i>=0: x_i!=y_i}, eps=2^-k";

class Alphabet {
 public:
  explicit Alphabet(int size);
  explicit Alphabet(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

class Sft;
Sft make_sft(int alphabet_size, const std::vector<std::vector<bool>>& transitions);

/// Vertex shift: word ij is allowed iff transitions[i][j].
class Sft {
 public:
  static Sft full(int size);

  int size() const { return alphabet_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }
  bool allowed(Symbol i, Symbol j) const {
    return transitions_[static_cast<std::size_t>(i) * size() + j] != 0;
  }
  bool is_full() const;
  /// True iff every symbol is in range and every consecutive pair is allowed.
  bool admissible(std::span<const Symbol> w) const;
  std::vector<std::vector<bool>> transitions() const;
  /// Number of admissible words of the given length (transfer-matrix count).
  double count_words(int length) const;

  friend Sft make_sft(int, const std::vector<std::vector<bool>>&);
  friend bool operator==(const Sft& a, const Sft& b) {
    return a.transitions_ == b.transitions_;
  }

 private:
  Sft(Alphabet alphabet, std::vector<unsigned char> transitions)
      : alphabet_(std::move(alphabet)), transitions_(std::move(transitions)) {}

  Alphabet alphabet_;
  std::vector<unsigned char> transitions_;  // row-major size x size
};

/// One-block code from a source SFT onto a target SFT.
class FactorCode {
 public:
  FactorCode(const Sft& source, const Sft& target, std::vector<Symbol> table);
  static FactorCode identity(const Sft& sft);

  Symbol operator()(Symbol s) const { return table_[static_cast<std::size_t>(s)]; }
  Word apply(std::span<const Symbol> w) const;

  int source_size() const { return static_cast<int>(table_.size()); }
  int target_size() const { return target_size_; }
  const std::vector<Symbol>& table() const { return table_; }
  bool injective() const;
  /// fibers()[j] lists the source symbols mapped to j, in increasing order.
  std::vector<std::vector<Symbol>> fibers() const;

  friend bool operator==(const FactorCode&, const FactorCode&) = default;

 private:
  std::vector<Symbol> table_;
  int target_size_;
};

/// Source SFT X1, target SFT X2 and the factor code pi: X1 -> X2.
class SymbolicSystem {
 public:
  SymbolicSystem(Sft source, Sft target, FactorCode code);
  static SymbolicSystem with_identity(Sft source);
  /// Target is the one-step SFT induced by the image of allowed transitions.
  static SymbolicSystem with_induced_factor(Sft source, std::vector<Symbol> table);

  const Sft& source() const { return source_; }
  const Sft& target() const { return target_; }
  const FactorCode& code() const { return code_; }

 private:
  Sft source_;
  Sft target_;
  FactorCode code_;
};

/// Weight vector a = (a1, a2) with a1 > 0 and a2 >= 0.
class WeightVector {
 public:
  WeightVector(double a1, double a2);

  double a1() const { return a1_; }
  double a2() const { return a2_; }
  double total() const { return a1_ + a2_; }
  WeightVector scaled(double c) const { return {a1_ * c, a2_ * c}; }

 private:
  double a1_;
  double a2_;
};

/// Least integer not less than x. Values within a relative 1e-9 of an integer
/// are treated as that integer so that weights carrying rounding error (for
/// example 1/log 9 + (1/log 3 - 1/log 9)) still land on exact window lengths.
int ceil_window(double x);

/// Window lengths of the weighted Bowen ball of order n at resolution 2^{-k}.
struct WeightedBallSpec {
  int order_n = 0;
  int resolution_k = 0;
  int len1 = 0;  // source symbols fixed on [0, len1)
  int len2 = 0;  // factor symbols fixed on [0, len2)

  friend bool operator==(const WeightedBallSpec&, const WeightedBallSpec&) = default;
};

WeightedBallSpec ball_spec(const WeightVector& a, int n, int k);

/// 2^{-m} with m the first disagreement below depth, 0 if none.
double symbolic_distance(std::span<const Symbol> x, std::span<const Symbol> y, int depth);

bool in_weighted_ball(std::span<const Symbol> center, std::span<const Symbol> y,
                      const WeightedBallSpec& spec, const FactorCode& code);

/// The set {y : y[0,len1) = prefix, code(y)[len1,len2) = factor_tail}.
struct WeightedCylinder {
  Word prefix;
  Word factor_tail;

  friend bool operator==(const WeightedCylinder&, const WeightedCylinder&) = default;
  friend auto operator<=>(const WeightedCylinder&, const WeightedCylinder&) = default;
};

inline constexpr int kDefaultMaxDepth = 24;
inline constexpr std::size_t kDefaultMaxCylinders = std::size_t{1} << 22;

/// All nonempty weighted cylinders of the given window, in lexicographic order.
/// They partition X1. Throws Refusal when len2 exceeds max_depth or the count
/// exceeds max_count.
std::vector<WeightedCylinder> enumerate_weighted_cylinders(
    const SymbolicSystem& system, int len1, int len2, int max_depth = kDefaultMaxDepth,
    std::size_t max_count = kDefaultMaxCylinders);

inline std::vector<WeightedCylinder> enumerate_weighted_cylinders(
    const SymbolicSystem& system, const WeightedBallSpec& spec,
    int max_depth = kDefaultMaxDepth) {
  return enumerate_weighted_cylinders(system, spec.len1, spec.len2, max_depth);
}

/// Source states that can occupy the last position of a word whose factor
/// image is `tail`, given the previous source symbol (or any start if
/// `previous` is empty). Empty result means the constraint is unrealizable.
std::vector<bool> reachable_states(const SymbolicSystem& system,
                                   std::optional<Symbol> previous,
                                   std::span<const Symbol> tail);

/// An admissible source word of length len1 + |factor_tail| lying in the
/// cylinder. Throws InvalidInput if the cylinder is empty.
Word realize(const SymbolicSystem& system, const WeightedCylinder& cylinder);

/// Contents of an SFT description file. `table` is present iff the file had a
/// factor line.
struct SystemFile {
  int alphabet_size = 0;
  std::vector<std::vector<bool>> transitions;
  std::optional<std::vector<Symbol>> table;

  friend bool operator==(const SystemFile&, const SystemFile&) = default;
};

SystemFile parse_system_file(std::string_view text);
std::string format_system_file(const SystemFile& file);
SymbolicSystem to_system(const SystemFile& file);
SymbolicSystem load_system(const std::string& path);

}  // namespace wbe
