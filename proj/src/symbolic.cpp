#include "wbe/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wbe/errors.hpp"

namespace wbe {

Alphabet::Alphabet(int size) {
  require(size >= 1, "alphabet size must be at least 1");
  labels_.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) labels_.push_back(std::to_string(i));
}

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  require(!labels_.empty(), "alphabet size must be at least 1");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  require(seen.size() == labels_.size(), "alphabet labels must be distinct");
}

Sft make_sft(int alphabet_size, const std::vector<std::vector<bool>>& transitions) {
  require(alphabet_size >= 1, "alphabet size must be at least 1");
  const auto n = static_cast<std::size_t>(alphabet_size);
  require(transitions.size() == n, "transition matrix must be square with dimension = alphabet size");
  std::vector<unsigned char> flat(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    require(transitions[i].size() == n,
            "transition matrix must be square with dimension = alphabet size");
    for (std::size_t j = 0; j < n; ++j) flat[i * n + j] = transitions[i][j] ? 1 : 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool row = false;
    bool col = false;
    for (std::size_t j = 0; j < n; ++j) {
      row = row || flat[i * n + j];
      col = col || flat[j * n + i];
    }
    if (!row || !col) throw InvalidInput("stranded symbol " + std::to_string(i));
  }
  return Sft(Alphabet(alphabet_size), std::move(flat));
}

Sft Sft::full(int size) {
  require(size >= 1, "alphabet size must be at least 1");
  const auto n = static_cast<std::size_t>(size);
  return make_sft(size, std::vector<std::vector<bool>>(n, std::vector<bool>(n, true)));
}

bool Sft::is_full() const {
  return std::all_of(transitions_.begin(), transitions_.end(), [](unsigned char c) { return c; });
}

bool Sft::admissible(std::span<const Symbol> w) const {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] < 0 || w[i] >= size()) return false;
    if (i > 0 && !allowed(w[i - 1], w[i])) return false;
  }
  return true;
}

std::vector<std::vector<bool>> Sft::transitions() const {
  const int n = size();
  std::vector<std::vector<bool>> out(static_cast<std::size_t>(n), std::vector<bool>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i][j] = allowed(i, j);
  return out;
}

double Sft::count_words(int length) const {
  require(length >= 0, "word length must be nonnegative");
  if (length == 0) return 1.0;
  const int n = size();
  std::vector<double> ends(static_cast<std::size_t>(n), 1.0);
  for (int step = 1; step < length; ++step) {
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (allowed(i, j)) next[j] += ends[i];
    ends = std::move(next);
  }
  double total = 0.0;
  for (double v : ends) total += v;
  return total;
}

FactorCode::FactorCode(const Sft& source, const Sft& target, std::vector<Symbol> table)
    : table_(std::move(table)), target_size_(target.size()) {
  require(static_cast<int>(table_.size()) == source.size(),
          "factor table must have one entry per source symbol");
  std::vector<bool> hit(static_cast<std::size_t>(target_size_), false);
  for (Symbol t : table_) {
    require(t >= 0 && t < target_size_, "factor table entry outside the target alphabet");
    hit[static_cast<std::size_t>(t)] = true;
  }
  require(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }),
          "factor code is not surjective onto the target alphabet");
  for (int i = 0; i < source.size(); ++i)
    for (int j = 0; j < source.size(); ++j)
      if (source.allowed(i, j))
        require(target.allowed(table_[i], table_[j]),
                "factor code does not commute with transitions at word " + std::to_string(i) +
                    std::to_string(j));
}

FactorCode FactorCode::identity(const Sft& sft) {
  std::vector<Symbol> table(static_cast<std::size_t>(sft.size()));
  for (int i = 0; i < sft.size(); ++i) table[i] = i;
  return FactorCode(sft, sft, std::move(table));
}

Word FactorCode::apply(std::span<const Symbol> w) const {
  Word out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = (*this)(w[i]);
  return out;
}

bool FactorCode::injective() const { return target_size_ == source_size(); }

std::vector<std::vector<Symbol>> FactorCode::fibers() const {
  std::vector<std::vector<Symbol>> out(static_cast<std::size_t>(target_size_));
  for (int i = 0; i < source_size(); ++i) out[table_[i]].push_back(i);
  return out;
}

SymbolicSystem::SymbolicSystem(Sft source, Sft target, FactorCode code)
    : source_(std::move(source)), target_(std::move(target)), code_(std::move(code)) {
  require(code_.source_size() == source_.size() && code_.target_size() == target_.size(),
          "factor code does not match the system alphabets");
}

SymbolicSystem SymbolicSystem::with_identity(Sft source) {
  FactorCode code = FactorCode::identity(source);
  Sft target = source;
  return SymbolicSystem(std::move(source), std::move(target), std::move(code));
}

SymbolicSystem SymbolicSystem::with_induced_factor(Sft source, std::vector<Symbol> table) {
  require(static_cast<int>(table.size()) == source.size(),
          "factor table must have one entry per source symbol");
  int target_size = 0;
  for (Symbol t : table) {
    require(t >= 0, "factor table entries must be nonnegative");
    target_size = std::max(target_size, t + 1);
  }
  std::vector<std::vector<bool>> induced(static_cast<std::size_t>(target_size),
                                         std::vector<bool>(target_size, false));
  for (int i = 0; i < source.size(); ++i)
    for (int j = 0; j < source.size(); ++j)
      if (source.allowed(i, j)) induced[table[i]][table[j]] = true;
  Sft target = make_sft(target_size, induced);
  FactorCode code(source, target, std::move(table));
  return SymbolicSystem(std::move(source), std::move(target), std::move(code));
}

WeightVector::WeightVector(double a1, double a2) : a1_(a1), a2_(a2) {
  require(std::isfinite(a1) && a1 > 0.0, "weight a1 must be positive");
  require(std::isfinite(a2) && a2 >= 0.0, "weight a2 must be nonnegative");
}

int ceil_window(double x) {
  const double slack = 1e-9 * std::max(1.0, std::abs(x));
  return static_cast<int>(std::ceil(x - slack));
}

WeightedBallSpec ball_spec(const WeightVector& a, int n, int k) {
  require(n >= 1, "ball order n must be at least 1");
  require(k >= 0, "resolution k must be nonnegative");
  WeightedBallSpec spec;
  spec.order_n = n;
  spec.resolution_k = k;
  spec.len1 = ceil_window(a.a1() * n) + k;
  spec.len2 = ceil_window(a.total() * n) + k;
  if (spec.len2 < spec.len1 || spec.len1 < 1)
    throw InvariantViolation("weighted ball windows out of order");
  return spec;
}

double symbolic_distance(std::span<const Symbol> x, std::span<const Symbol> y, int depth) {
  require(depth >= 0 && static_cast<int>(x.size()) >= depth && static_cast<int>(y.size()) >= depth,
          "words shorter than the comparison depth");
  for (int m = 0; m < depth; ++m)
    if (x[m] != y[m]) return std::ldexp(1.0, -m);
  return 0.0;
}

bool in_weighted_ball(std::span<const Symbol> center, std::span<const Symbol> y,
                      const WeightedBallSpec& spec, const FactorCode& code) {
  require(static_cast<int>(center.size()) >= spec.len2 && static_cast<int>(y.size()) >= spec.len2,
          "words shorter than the weighted ball window");
  for (int i = 0; i < spec.len1; ++i)
    if (center[i] != y[i]) return false;
  for (int i = spec.len1; i < spec.len2; ++i)
    if (code(center[i]) != code(y[i])) return false;
  return true;
}

std::vector<bool> reachable_states(const SymbolicSystem& system, std::optional<Symbol> previous,
                                   std::span<const Symbol> tail) {
  const Sft& sft = system.source();
  const FactorCode& code = system.code();
  const int n = sft.size();
  std::vector<bool> current(static_cast<std::size_t>(n), false);
  bool any_start = !previous.has_value();
  if (previous) current[*previous] = true;
  for (Symbol c : tail) {
    std::vector<bool> next(static_cast<std::size_t>(n), false);
    bool nonempty = false;
    for (int j = 0; j < n; ++j) {
      if (code(j) != c) continue;
      bool ok = any_start;
      for (int i = 0; i < n && !ok; ++i) ok = current[i] && sft.allowed(i, j);
      if (ok) {
        next[j] = true;
        nonempty = true;
      }
    }
    any_start = false;
    current = std::move(next);
    if (!nonempty) return current;
  }
  return current;
}

namespace {

struct CylinderEnumerator {
  const SymbolicSystem& system;
  int len1;
  int len2;
  std::size_t max_count;
  std::vector<WeightedCylinder> out;
  Word prefix;
  Word tail;

  void tails(const std::vector<bool>& states) {
    if (static_cast<int>(tail.size()) == len2 - len1) {
      if (out.size() >= max_count)
        throw Refusal("weighted cylinder count exceeds the configured cap");
      out.push_back({prefix, tail});
      return;
    }
    const Sft& sft = system.source();
    const int n = sft.size();
    const bool any_start = prefix.empty() && tail.empty();
    for (Symbol c = 0; c < system.code().target_size(); ++c) {
      std::vector<bool> next(static_cast<std::size_t>(n), false);
      bool nonempty = false;
      for (int j = 0; j < n; ++j) {
        if (system.code()(j) != c) continue;
        bool ok = any_start;
        for (int i = 0; i < n && !ok; ++i) ok = states[i] && sft.allowed(i, j);
        if (ok) next[j] = nonempty = true;
      }
      if (!nonempty) continue;
      tail.push_back(c);
      tails(next);
      tail.pop_back();
    }
  }

  void prefixes() {
    const Sft& sft = system.source();
    if (static_cast<int>(prefix.size()) == len1) {
      std::vector<bool> states(static_cast<std::size_t>(sft.size()), false);
      if (!prefix.empty()) states[prefix.back()] = true;
      tails(states);
      return;
    }
    for (Symbol s = 0; s < sft.size(); ++s) {
      if (!prefix.empty() && !sft.allowed(prefix.back(), s)) continue;
      prefix.push_back(s);
      prefixes();
      prefix.pop_back();
    }
  }
};

}  // namespace

std::vector<WeightedCylinder> enumerate_weighted_cylinders(const SymbolicSystem& system, int len1,
                                                           int len2, int max_depth,
                                                           std::size_t max_count) {
  require(len1 >= 0 && len2 >= len1, "weighted cylinder windows out of order");
  if (len2 > max_depth)
    throw Refusal("weighted cylinder depth " + std::to_string(len2) +
                  " exceeds the configured maximum " + std::to_string(max_depth));
  CylinderEnumerator e{system, len1, len2, max_count, {}, {}, {}};
  e.prefixes();
  return std::move(e.out);
}

Word realize(const SymbolicSystem& system, const WeightedCylinder& cylinder) {
  const Sft& sft = system.source();
  require(sft.admissible(cylinder.prefix), "cylinder prefix is not admissible");
  const int n = sft.size();
  const std::size_t t = cylinder.factor_tail.size();
  // Forward reachable sets, then backtrack one admissible path.
  std::vector<std::vector<bool>> sets;
  sets.reserve(t);
  std::optional<Symbol> prev;
  if (!cylinder.prefix.empty()) prev = cylinder.prefix.back();
  for (std::size_t i = 0; i < t; ++i) {
    auto set = reachable_states(system, prev, std::span(cylinder.factor_tail).first(i + 1));
    if (std::none_of(set.begin(), set.end(), [](bool b) { return b; }))
      throw InvalidInput("weighted cylinder is empty");
    sets.push_back(std::move(set));
  }
  Word out = cylinder.prefix;
  out.resize(cylinder.prefix.size() + t);
  for (std::size_t i = t; i-- > 0;) {
    Symbol chosen = -1;
    for (int j = 0; j < n && chosen < 0; ++j) {
      if (!sets[i][j]) continue;
      if (i + 1 < t && !sft.allowed(j, out[cylinder.prefix.size() + i + 1])) continue;
      chosen = j;
    }
    if (chosen < 0) throw InvariantViolation("failed to realize weighted cylinder");
    out[cylinder.prefix.size() + i] = chosen;
  }
  return out;
}

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos)
    lines.pop_back();
  return lines;
}

std::vector<long> parse_ints(const std::string& line, int lineno) {
  std::istringstream in(line);
  std::vector<long> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size())
      throw InvalidInput("line " + std::to_string(lineno) + ": expected integer, got '" + token +
                         "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

SystemFile parse_system_file(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw InvalidInput("empty system file");
  const auto header = parse_ints(lines[0], 1);
  if (header.size() != 1 || header[0] < 1)
    throw InvalidInput("line 1: expected a positive alphabet size");
  SystemFile file;
  file.alphabet_size = static_cast<int>(header[0]);
  const auto n = static_cast<std::size_t>(file.alphabet_size);
  if (lines.size() < n + 1) throw InvalidInput("system file has fewer matrix rows than symbols");
  if (lines.size() > n + 2) throw InvalidInput("system file has trailing lines");
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = parse_ints(lines[r + 1], static_cast<int>(r + 2));
    if (row.size() != n)
      throw InvalidInput("line " + std::to_string(r + 2) + ": expected " + std::to_string(n) +
                         " entries");
    std::vector<bool> bits(n);
    for (std::size_t c = 0; c < n; ++c) {
      if (row[c] != 0 && row[c] != 1)
        throw InvalidInput("line " + std::to_string(r + 2) + ": matrix entries must be 0 or 1");
      bits[c] = row[c] == 1;
    }
    file.transitions.push_back(std::move(bits));
  }
  if (lines.size() == n + 2) {
    const auto table = parse_ints(lines[n + 1], static_cast<int>(n + 2));
    if (table.size() != n) throw InvalidInput("factor line must have one entry per symbol");
    file.table.emplace();
    for (long t : table) file.table->push_back(static_cast<Symbol>(t));
  }
  return file;
}

std::string format_system_file(const SystemFile& file) {
  std::string out = std::to_string(file.alphabet_size) + "\n";
  for (const auto& row : file.transitions) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ' ';
      out += row[c] ? '1' : '0';
    }
    out += '\n';
  }
  if (file.table) {
    for (std::size_t i = 0; i < file.table->size(); ++i) {
      if (i) out += ' ';
      out += std::to_string((*file.table)[i]);
    }
    out += '\n';
  }
  return out;
}

SymbolicSystem to_system(const SystemFile& file) {
  Sft sft = make_sft(file.alphabet_size, file.transitions);
  if (!file.table) return SymbolicSystem::with_identity(std::move(sft));
  return SymbolicSystem::with_induced_factor(std::move(sft), *file.table);
}

SymbolicSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open system file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return to_system(parse_system_file(buf.str()));
}

}  // namespace wbe
