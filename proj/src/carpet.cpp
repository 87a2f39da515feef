#include "wbe/carpet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "wbe/errors.hpp"
#include "wbe/io.hpp"
#include "wbe/rng.hpp"
#include "wbe/weighted_entropy.hpp"

namespace wbe {

CarpetSpec::CarpetSpec(int m1, int m2, std::vector<Digit> digits)
    : m1_(m1), m2_(m2), digits_(std::move(digits)) {
  require(m1_ >= 2, "carpet needs m1 >= 2");
  require(m2_ >= m1_, "carpet needs m2 >= m1");
  require(!digits_.empty(), "carpet digit set is empty");
  for (const Digit& d : digits_)
    require(d.i >= 0 && d.i < m1_ && d.j >= 0 && d.j < m2_,
            "digit (" + std::to_string(d.i) + "," + std::to_string(d.j) + ") out of range");
  std::sort(digits_.begin(), digits_.end());
  digits_.erase(std::unique(digits_.begin(), digits_.end()), digits_.end());
}

int CarpetSpec::index_of(Digit d) const {
  const auto it = std::lower_bound(digits_.begin(), digits_.end(), d);
  return it != digits_.end() && *it == d ? static_cast<int>(it - digits_.begin()) : -1;
}

std::vector<int> CarpetSpec::column_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(m1_), 0);
  for (const Digit& d : digits_) ++counts[static_cast<std::size_t>(d.i)];
  return counts;
}

ColumnStructure CarpetSpec::columns() const {
  ColumnStructure cols;
  int current = -1;
  for (std::size_t s = 0; s < digits_.size(); ++s) {
    if (digits_[s].i != current) {
      cols.columns.emplace_back();
      current = digits_[s].i;
    }
    cols.columns.back().push_back(static_cast<Symbol>(s));
  }
  return cols;
}

WeightVector carpet_weights(const CarpetSpec& spec) {
  const double l1 = std::log(static_cast<double>(spec.m1()));
  const double l2 = std::log(static_cast<double>(spec.m2()));
  return {1.0 / l2, spec.m1() == spec.m2() ? 0.0 : 1.0 / l1 - 1.0 / l2};
}

double carpet_dimension(const CarpetSpec& spec) {
  const double l1 = std::log(static_cast<double>(spec.m1()));
  const double l2 = std::log(static_cast<double>(spec.m2()));
  const double t = l1 / l2;
  double z = 0.0;
  for (int n : spec.column_counts())
    if (n > 0) z += std::pow(static_cast<double>(n), t);
  const double dim = std::log(z) / l1;
  const double check = lagrange_optimum(spec.columns(), carpet_weights(spec)).value;
  if (std::abs(dim - check) > 1e-9)
    throw InvariantViolation("carpet dimension disagrees with the variational optimum");
  return dim;
}

double torus_weighted_entropy(int m1, int m2) {
  require(m1 >= 2 && m2 >= m1, "need 2 <= m1 <= m2");
  const WeightVector a = carpet_weights(CarpetSpec(m1, m2, {{0, 0}}));
  return a.a1() * std::log(static_cast<double>(m1) * m2) + a.a2() * std::log(static_cast<double>(m1));
}

SymbolicSystem carpet_system(const CarpetSpec& spec) {
  const auto n = static_cast<int>(spec.digits().size());
  return SymbolicSystem::with_induced_factor(Sft::full(n), spec.columns().table());
}

namespace {

void check_word(const CarpetSpec& spec, std::span<const Symbol> word) {
  const auto n = static_cast<Symbol>(spec.digits().size());
  for (Symbol s : word) require(s >= 0 && s < n, "digit symbol outside the carpet spec");
}

double wrap(double x) {
  x -= std::floor(x);
  return x >= 1.0 ? 0.0 : x;
}

}  // namespace

TorusPoint encode_point(const CarpetSpec& spec, std::span<const Symbol> word) {
  check_word(spec, word);
  double x1 = 0.0;
  double x2 = 0.0;
  for (std::size_t k = word.size(); k-- > 0;) {
    const Digit& d = spec.digits()[static_cast<std::size_t>(word[k])];
    x1 = (d.i + x1) / spec.m1();
    x2 = (d.j + x2) / spec.m2();
  }
  return {wrap(x1), wrap(x2)};
}

std::vector<TorusPoint> encode_orbit(const CarpetSpec& spec, std::span<const Symbol> word,
                                     int length) {
  require(length >= 0 && length <= static_cast<int>(word.size()),
          "orbit length exceeds the digit word");
  std::vector<TorusPoint> out;
  out.reserve(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) out.push_back(encode_point(spec, word.subspan(n)));
  return out;
}

namespace {

std::vector<int> expand(double x, int m, int depth) {
  std::vector<int> digits;
  digits.reserve(static_cast<std::size_t>(depth));
  for (int k = 0; k < depth; ++k) {
    const double y = x * m;
    int d = static_cast<int>(std::floor(y + 1e-9));
    d = std::clamp(d, 0, m - 1);
    digits.push_back(d);
    x = std::max(0.0, y - d);
  }
  return digits;
}

}  // namespace

std::vector<Digit> decode_point(const CarpetSpec& spec, TorusPoint p, int depth) {
  require(depth >= 0, "decode depth must be nonnegative");
  require(p.x1 >= 0.0 && p.x1 < 1.0 && p.x2 >= 0.0 && p.x2 < 1.0,
          "torus point coordinates must lie in [0,1)");
  const auto is = expand(p.x1, spec.m1(), depth);
  const auto js = expand(p.x2, spec.m2(), depth);
  std::vector<Digit> out;
  for (int k = 0; k < depth; ++k) out.push_back({is[static_cast<std::size_t>(k)], js[static_cast<std::size_t>(k)]});
  return out;
}

Word decode_word(const CarpetSpec& spec, TorusPoint p, int depth) {
  Word w;
  for (const Digit& d : decode_point(spec, p, depth)) {
    const int s = spec.index_of(d);
    if (s < 0)
      throw InvalidInput("point leaves the carpet: digit (" + std::to_string(d.i) + "," +
                         std::to_string(d.j) + ")");
    w.push_back(s);
  }
  return w;
}

SkewFunction SkewFunction::zero() {
  SkewFunction f;
  f.name_ = "zero";
  return f;
}

SkewFunction SkewFunction::constant(double c) {
  SkewFunction f;
  f.name_ = "constant";
  f.xs_ = {0.0};
  f.ys_ = {c};
  return f;
}

SkewFunction SkewFunction::linear(double slope, double intercept) {
  SkewFunction f;
  f.name_ = "linear";
  f.xs_ = {0.0, 1.0};
  f.ys_ = {intercept, intercept + slope};
  return f;
}

SkewFunction SkewFunction::tabulated(std::vector<double> xs, std::vector<double> ys) {
  require(!xs.empty() && xs.size() == ys.size(), "tabulated phi needs matching nonempty knots");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] >= 0.0 && xs[i] <= 1.0, "phi knots must lie in [0,1]");
    if (i) require(xs[i] > xs[i - 1], "phi knots must be strictly increasing");
  }
  SkewFunction f;
  f.name_ = "tabulated";
  f.xs_ = std::move(xs);
  f.ys_ = std::move(ys);
  return f;
}

double SkewFunction::operator()(double x) const {
  if (xs_.empty()) return 0.0;
  if (xs_.size() == 1 || x <= xs_.front()) return ys_.front();
  if (x >= xs_.back()) return ys_.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
  return ys_[lo] + t * (ys_[hi] - ys_[lo]);
}

std::vector<TorusPoint> skew_orbit(const CarpetSpec& spec, const SkewFunction& phi, TorusPoint p0,
                                   int n) {
  require(n >= 0, "orbit length must be nonnegative");
  std::vector<TorusPoint> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back({wrap(p0.x1), wrap(p0.x2)});
  for (int t = 0; t < n; ++t) {
    const TorusPoint& p = out.back();
    out.push_back({wrap(spec.m1() * p.x1), wrap(spec.m2() * p.x2 + phi(p.x1))});
  }
  return out;
}

std::vector<TorusPoint> sample_carpet_points(const CarpetSpec& spec, std::size_t count, int depth,
                                             std::uint64_t seed) {
  require(depth >= 1, "sample depth must be positive");
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(spec.digits().size());
  std::vector<TorusPoint> out;
  out.reserve(count);
  Word w(static_cast<std::size_t>(depth));
  for (std::size_t c = 0; c < count; ++c) {
    for (auto& s : w) s = static_cast<Symbol>(rng.next() % n);
    out.push_back(encode_point(spec, w));
  }
  return out;
}

BoxCountResult box_counting_dimension(std::span<const TorusPoint> sample, int m1, int m2,
                                      std::span<const int> scales) {
  require(m1 >= 2 && m2 >= m1, "need 2 <= m1 <= m2");
  require(scales.size() >= 2, "box counting needs at least two scales");
  require(!sample.empty(), "box counting needs a nonempty sample");
  const double ratio = std::log(static_cast<double>(m1)) / std::log(static_cast<double>(m2));
  BoxCountResult out;
  std::vector<double> xs;
  std::vector<double> ys;
  for (int k : scales) {
    require(k >= 0, "scale exponents must be nonnegative");
    BoxCountRow row;
    row.k = k;
    row.l = static_cast<int>(std::lround(k * ratio));
    const double c1 = std::pow(static_cast<double>(m1), k);
    const double c2 = std::pow(static_cast<double>(m2), row.l);
    require(c1 * c2 < 1.8e19, "box grid too fine");
    std::unordered_set<std::uint64_t> boxes;
    for (const TorusPoint& p : sample) {
      const auto b1 = static_cast<std::uint64_t>(std::min(c1 - 1.0, std::floor(p.x1 * c1 + 1e-9)));
      const auto b2 = static_cast<std::uint64_t>(std::min(c2 - 1.0, std::floor(p.x2 * c2 + 1e-9)));
      boxes.insert(b1 * static_cast<std::uint64_t>(c2) + b2);
    }
    row.occupied = boxes.size();
    row.log_inv_delta = 0.5 * (std::log(c1) + std::log(c2));
    xs.push_back(row.log_inv_delta);
    ys.push_back(std::log(static_cast<double>(row.occupied)));
    out.rows.push_back(row);
  }
  out.dimension = least_squares_line(xs, ys).first;
  return out;
}

CarpetSpec parse_carpet_file(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  int m1 = 0;
  int m2 = 0;
  bool header = false;
  std::vector<Digit> digits;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
      continue;
    std::istringstream fields(line);
    std::string extra;
    if (!header) {
      std::string tag;
      if (!(fields >> tag >> m1 >> m2) || tag != "carpet" || (fields >> extra))
        throw InvalidInput("line " + std::to_string(line_no) + ": expected 'carpet m1 m2'");
      header = true;
      continue;
    }
    Digit d;
    if (!(fields >> d.i >> d.j) || (fields >> extra))
      throw InvalidInput("line " + std::to_string(line_no) + ": expected a digit pair 'i j'");
    digits.push_back(d);
  }
  if (!header) throw InvalidInput("carpet file has no header");
  return CarpetSpec(m1, m2, std::move(digits));
}

std::string format_carpet_file(const CarpetSpec& spec) {
  std::string out = "carpet " + std::to_string(spec.m1()) + " " + std::to_string(spec.m2()) + "\n";
  for (const Digit& d : spec.digits()) out += std::to_string(d.i) + " " + std::to_string(d.j) + "\n";
  return out;
}

CarpetSpec load_carpet(const std::string& path) { return parse_carpet_file(read_text_file(path)); }

std::string format_points_csv(std::span<const TorusPoint> points) {
  std::string out = "x1,x2\n";
  for (const TorusPoint& p : points) out += format_double(p.x1) + "," + format_double(p.x2) + "\n";
  return out;
}

}  // namespace wbe
