#include "wbe/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wbe/carpet.hpp"
#include "wbe/errors.hpp"
#include "wbe/harness.hpp"
#include "wbe/measures.hpp"
#include "wbe/rds.hpp"
#include "wbe/rng.hpp"
#include "wbe/symbolic.hpp"
#include "wbe/validators.hpp"
#include "wbe/variational.hpp"
#include "wbe/weighted_entropy.hpp"

#ifndef WBE_DATA_DIR
#define WBE_DATA_DIR "data"
#endif

namespace wbe {

namespace {

using Check = std::pair<bool, std::string>;

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

ExperimentConfig config(const std::string& subcommand,
                        std::initializer_list<std::pair<std::string, std::string>> kv) {
  ExperimentConfig cfg(subcommand);
  for (const auto& [k, v] : kv) cfg.set(k, v);
  return cfg;
}

const nlohmann::json& last_record(const Outcome& o) {
  if (o.records.empty()) throw InvariantViolation("subcommand produced no records");
  return o.records.back();
}

const double kVariational = 2.0 * std::log(1.0 + std::numbers::sqrt2);
const double kSmbTarget = 1.735126;

Check ac1(const std::string& data) {
  const std::string spec = data + "/mcmullen23.carpet";
  const double dim =
      last_record(execute(config("dimension carpet", {{"spec", spec}}))).at("dimension").get<double>();
  const auto var = last_record(execute(config("variational optimize", {{"spec", spec}})));
  // Variational value in units of the carpet weights; the dimension is that value.
  const double v = var.at("value").get<double>();
  const bool target = std::abs(dim - 1.349716) <= 1e-6;
  const bool agree = std::abs(dim - v) <= 1e-9;
  return {target && agree, fmt("dimension %.10f, variational %.10f, expected 1.349716", dim, v)};
}

Check ac2(const std::string& data) {
  const std::string sys = data + "/column3.sft";
  bool lower_direction = true;
  std::string extra;
  double lo = 0.0, hi = 0.0;
  for (const int depth : {16, 20, 24}) {
    const auto rec = last_record(execute(config(
        "entropy weighted-cover",
        {{"system", sys}, {"a1", "1"}, {"a2", "1"}, {"k", "0"}, {"depth", std::to_string(depth)}, {"tol", "1e-3"}})));
    const double s_low = rec.at("s_low").get<double>();
    const double s_high = rec.at("s_high").get<double>();
    lower_direction = lower_direction && kVariational <= s_high + 0.01;
    if (depth == 20) {
      lo = s_low;
      hi = s_high;
    }
    extra += fmt(" d%d=[%.4f,%.4f]", depth, s_low, s_high);
  }
  const double dist = kVariational < lo ? lo - kVariational : (kVariational > hi ? kVariational - hi : 0.0);
  return {dist <= 0.05 && lower_direction,
          fmt("bracket [%.6f, %.6f], distance %.6f to %.6f;", lo, hi, dist, kVariational) + extra};
}

Check ac3(const std::string& data) {
  const auto rec = last_record(execute(config(
      "entropy weighted-cover",
      {{"system", data + "/golden.sft"}, {"a1", "1"}, {"a2", "0"}, {"k", "0"}, {"depth", "24"}, {"tol", "1e-3"}})));
  const double target = topological_entropy(load_system(data + "/golden.sft").source());
  const double lo = rec.at("s_low").get<double>();
  const double hi = rec.at("s_high").get<double>();
  const double dist = target < lo ? lo - target : (target > hi ? target - hi : 0.0);
  return {dist <= 0.02, fmt("bracket [%.6f, %.6f], Parry %.6f", lo, hi, target)};
}

// Random irreducible SFT: the cycle 0 -> 1 -> ... -> 0 is always allowed.
SymbolicSystem random_system(Rng& rng) {
  const int n = 2 + static_cast<int>(rng.below(2));
  std::vector<std::vector<bool>> t(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) t[i][j] = rng.uniform() < 0.6;
    t[i][(i + 1) % t.size()] = true;
  }
  std::vector<Symbol> table(static_cast<std::size_t>(n));
  for (auto& s : table) s = static_cast<Symbol>(rng.below(2));
  table[0] = 0;
  return SymbolicSystem::with_induced_factor(make_sft(n, t), table);
}

Check ac4(const std::string&) {
  Rng rng(derive_seed(20240917, 4));
  int tested = 0, violations = 0, skipped = 0;
  double worst = -1.0;
  while (tested < 24) {
    const auto sys = random_system(rng);
    const WeightVector a(0.5 + rng.uniform(), rng.uniform() < 0.3 ? 0.0 : rng.uniform());
    CoverProblem p;
    p.resolution_k = static_cast<int>(rng.below(2));
    p.depth_cap = 4 + static_cast<int>(rng.below(3));
    const int n_max = max_order_within(a, p.resolution_k, p.depth_cap);
    if (n_max < 1) continue;
    p.min_order = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_max)));
    const double s = 0.2 + 1.5 * rng.uniform();
    double frac = 0.0;
    try {
      frac = fractional_cover_cost(sys, a, s, p);
    } catch (const Refusal&) {
      ++skipped;
      continue;
    }
    const double integral = min_cover_cost(sys, a, s, p);
    ++tested;
    const double excess = frac - integral;
    worst = std::max(worst, excess);
    if (excess > 1e-9 * std::max(1.0, integral)) ++violations;
  }
  return {violations == 0, fmt("%d instances, %d violations, %d refused, max frac-int %.3g", tested,
                               violations, skipped, worst)};
}

Check ac5(const std::string& data) {
  const auto o = execute(config("validate smb", {{"system", data + "/column3.sft"},
                                                 {"measure", data + "/uniform3.measure"},
                                                 {"a1", "1"}, {"a2", "1"},
                                                 {"n_grid", "100..2000:100"},
                                                 {"trajectories", "200"},
                                                 {"seed", "5"}}));
  const auto rec = last_record(o);
  const double v = rec.at("value").get<double>();
  const double ci = rec.at("ci").get<double>();
  const bool pass = std::abs(v - kSmbTarget) <= ci && ci < 0.02;
  return {pass, fmt("value %.6f, CI halfwidth %.6f, target %.6f", v, ci, kSmbTarget)};
}

Check ac6(const std::string& data) {
  const auto o = execute(config("validate brin-katok", {{"system", data + "/column3.sft"},
                                                        {"measure", data + "/uniform3.measure"},
                                                        {"a1", "1"}, {"a2", "1"}, {"k", "2"},
                                                        {"n_grid", "100..2000:100"},
                                                        {"points", "200"},
                                                        {"seed", "6"}}));
  const auto rec = last_record(o);
  const double gap = rec.at("tail_gap").get<double>();
  const double mean = rec.at("tail_mean").get<double>();
  const bool pass = gap < 0.05 && std::abs(mean - kSmbTarget) <= 0.03;
  return {pass, fmt("tail gap %.6f, tail mean %.6f", gap, mean)};
}

Check ac7(const std::string& data) {
  const auto sys = load_system(data + "/full2.sft");
  const Measure m = load_measure(data + "/uniform2.measure");
  const WeightVector a(1.0, 0.0);
  const std::vector<int> grid = parse_int_list("4..14");
  const std::vector<double> deltas{0.1, 0.5, 0.9};
  const auto r = katok_delta_report(sys, m, a, 0, grid, deltas, 0.03);
  bool near = true;
  std::string slopes;
  for (const auto& e : r.estimates) {
    near = near && std::abs(e.slope - std::numbers::ln2) <= 0.03;
    slopes += fmt(" %.6f", e.slope);
  }
  const auto n4 = katok_covering_number(sys, m, a, 4, 0, 0.5);
  return {near && r.pass && n4 == 9,
          "slopes" + slopes + fmt(", pairwise %.6f, N(4,0.5)=%llu", r.max_pairwise,
                                  static_cast<unsigned long long>(n4))};
}

Check ac8(const std::string& data) {
  const auto sys = load_system(data + "/full2.sft");
  const Measure m = load_measure(data + "/uniform2.measure");
  const WeightVector a(1.0, 0.0);
  const auto low = frostman_check(sys, m, a, 0.6, 0, 20, 60, 10000, derive_seed(8, 0));
  const auto high = frostman_check(sys, m, a, 0.75, 0, 30, 60, 10000, derive_seed(8, 1));
  bool every = high.points_violating == high.samples;
  for (const auto c : high.per_order) every = every && c == high.samples;
  return {low.violations == 0 && every,
          fmt("s=0.6: %zu violations; s=0.75: %zu of %zu points violate at every n", low.violations,
              high.points_violating, high.samples)};
}

Check ac9(const std::string& data) {
  const auto o = execute(config("rds fiber-entropy", {{"system", data + "/full2.sft"},
                                                      {"measure", data + "/uniform2.measure"},
                                                      {"a1", "1"}, {"a2", "0"},
                                                      {"driver.kind", "rotation"},
                                                      {"driver.alpha", "golden"},
                                                      {"fiber.kind", "constant"},
                                                      {"omega_samples", "32"},
                                                      {"seed", "9"}}));
  const auto rec = last_record(o);
  const double mean = rec.at("mean").get<double>();
  const double spread = rec.at("spread").get<double>();
  Rng rng(derive_seed(9, 1));
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int m1 = 2 + static_cast<int>(rng.below(9));
    const int m2 = m1 + static_cast<int>(rng.below(9));
    worst = std::max(worst, std::abs(torus_weighted_entropy(m1, m2) - 2.0));
  }
  const bool pass = spread <= 0.01 && std::abs(mean - std::numbers::ln2) <= 0.03 && worst <= 1e-12;
  return {pass, fmt("fiber mean %.6f, spread %.6f, torus identity error %.3g", mean, spread, worst)};
}

Check ac10(const std::string& data) {
  Rng rng(derive_seed(10, 0));
  std::string failures;
  int checks = 0;
  auto expect = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok && failures.find(what) == std::string::npos) failures += " " + what;
  };

  for (int trial = 0; trial < 30; ++trial) {
    const auto sys = random_system(rng);
    const WeightVector a(0.5 + rng.uniform(), rng.uniform());
    const int k = static_cast<int>(rng.below(3));
    const int n = 1 + static_cast<int>(rng.below(4));
    const auto outer = ball_spec(a, n, k);
    const auto inner = ball_spec(a, n + 1, k);
    const int len = inner.len2 + 1;
    Word x(static_cast<std::size_t>(len)), y(static_cast<std::size_t>(len));
    for (auto& s : x) s = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(sys.source().size())));
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = rng.uniform() < 0.85 ? x[i] : static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(sys.source().size())));
    if (in_weighted_ball(x, y, inner, sys.code())) expect(in_weighted_ball(x, y, outer, sys.code()), "ball-nesting");

    CoverProblem p;
    p.resolution_k = 0;
    p.depth_cap = 6;
    const int n_max = max_order_within(a, 0, p.depth_cap);
    const double s = 0.3 + rng.uniform();
    double previous = 0.0;
    for (int big_n = 1; big_n <= n_max; ++big_n) {
      p.min_order = big_n;
      const double c = min_cover_cost(sys, a, s, p);
      expect(c >= previous - 1e-12 * std::max(1.0, c), "cover-monotonicity");
      previous = c;
    }
  }

  for (int trial = 0; trial < 20; ++trial) {
    const int size = 2 + static_cast<int>(rng.below(4));
    std::vector<double> p(static_cast<std::size_t>(size));
    double total = 0.0;
    for (auto& v : p) total += (v = 0.05 + rng.uniform());
    for (auto& v : p) v /= total;
    std::vector<Symbol> table(p.size());
    for (auto& s : table) s = static_cast<Symbol>(rng.below(2));
    table[0] = 0;
    const auto sys = SymbolicSystem::with_induced_factor(Sft::full(size), table);
    const BernoulliMeasure b(p);
    const auto hf = factor_entropy(Measure(b), sys.code());
    expect(hf.upper <= bernoulli_entropy(b) + 1e-12, "factor-entropy");

    const auto cols = ColumnStructure::from_code(sys.code());
    const WeightVector a(0.5 + rng.uniform(), rng.uniform());
    std::vector<double> q(p.size());
    total = 0.0;
    for (auto& v : q) total += (v = 0.05 + rng.uniform());
    for (auto& v : q) v /= total;
    std::vector<double> mid(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) mid[i] = 0.5 * (p[i] + q[i]);
    const double fm = variational_objective(cols, a, mid);
    const double avg = 0.5 * (variational_objective(cols, a, p) + variational_objective(cols, a, q));
    expect(fm >= avg - 1e-12, "concavity");

    const auto cr = chain_rule_check(Measure(b), sys.code(), {0, 2, false}, {1, 3, true}, {0, 1, true});
    expect(cr.max_residual <= 1e-10, "chain-rule");
  }

  const auto cfg = config("entropy weighted-cover", {{"system", data + "/column3.sft"}, {"a1", "1"},
                                                     {"a2", "1"}, {"depth", "10"}, {"tol", "1e-3"}});
  const auto first = to_json_lines(execute(cfg).records);
  const auto second = to_json_lines(execute(cfg).records);
  expect(first == second, "determinism");
  const auto smb = config("validate smb", {{"system", data + "/column3.sft"}, {"a1", "1"}, {"a2", "1"},
                                           {"n_grid", "10..50:10"}, {"trajectories", "20"}, {"seed", "3"}});
  expect(to_json_lines(execute(smb).records) == to_json_lines(execute(smb).records), "determinism");

  return {failures.empty(), fmt("%d property checks", checks) + (failures.empty() ? "" : ", failed:" + failures)};
}

}  // namespace

const std::vector<AcceptanceCase>& acceptance_cases() {
  static const std::vector<AcceptanceCase> cases = {
      {"AC-1", "carpet dimension", 1.0, ac1},
      {"AC-2", "cover exponent on the column system", 60.0, ac2},
      {"AC-3", "a2 = 0 reduction on the golden mean shift", 30.0, ac3},
      {"AC-4", "fractional cover sandwich", 0.0, ac4},
      {"AC-5", "weighted SMB", 60.0, ac5},
      {"AC-6", "weighted Brin-Katok", 0.0, ac6},
      {"AC-7", "Katok formula and delta independence", 0.0, ac7},
      {"AC-8", "Frostman inequality", 0.0, ac8},
      {"AC-9", "RDS fiber constancy", 0.0, ac9},
      {"AC-10", "property suites", 0.0, ac10},
  };
  return cases;
}

std::optional<AcceptanceCase> find_acceptance_case(const std::string& id) {
  for (const auto& c : acceptance_cases())
    if (c.id == id) return c;
  return std::nullopt;
}

AcceptanceResult run_acceptance(const AcceptanceCase& c, const std::string& data_dir) {
  AcceptanceResult r;
  r.id = c.id;
  r.limit_seconds = c.limit_seconds;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto [pass, detail] = c.check(data_dir);
    r.pass = pass;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.limit_seconds > 0.0 && r.seconds >= c.limit_seconds) {
    r.pass = false;
    r.detail += fmt(" (runtime %.2fs over the %.0fs limit)", r.seconds, c.limit_seconds);
  }
  return r;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("WBE_DATA_DIR")) return env;
  return WBE_DATA_DIR;
}

}  // namespace wbe
