#include "wbe/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "wbe/acceptance.hpp"
#include "wbe/carpet.hpp"
#include "wbe/errors.hpp"
#include "wbe/io.hpp"
#include "wbe/measures.hpp"
#include "wbe/rds.hpp"
#include "wbe/symbolic.hpp"
#include "wbe/validators.hpp"
#include "wbe/variational.hpp"
#include "wbe/weighted_entropy.hpp"

#ifndef WBE_VERSION
#define WBE_VERSION "0.0.0"
#endif

namespace wbe {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

long parse_long(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw InvalidInput(what + ": expected an integer, got '" + t + "'");
  return v;
}

double parse_real(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw InvalidInput(what + ": expected a number, got '" + t + "'");
  return v;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, std::string value) {
  const auto& keys = config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw InvalidInput("unknown config key '" + key + "'");
  if (key == "subcommand") {
    subcommand_ = trim(value);
    return;
  }
  values_[key] = trim(value);
}

std::string ExperimentConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw InvalidInput("missing required key '" + key + "'");
  return it->second;
}

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() || it->second.empty() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key) const { return parse_real(get(key), key); }

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int ExperimentConfig::get_int(const std::string& key) const {
  const long v = parse_long(get(key), key);
  require(v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max(),
          key + ": out of range");
  return static_cast<int>(v);
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t ExperimentConfig::get_seed(std::uint64_t fallback) const {
  if (!has("seed")) return fallback;
  const std::string t = get("seed");
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw InvalidInput("seed: expected a nonnegative integer");
  return v;
}

std::vector<int> parse_int_list(std::string_view text) {
  const std::string t = trim(text);
  std::vector<int> out;
  if (const auto dots = t.find(".."); dots != std::string::npos) {
    const auto colon = t.find(':', dots);
    const long lo = parse_long(t.substr(0, dots), "range start");
    const long hi = parse_long(t.substr(dots + 2, colon == std::string::npos ? colon : colon - dots - 2),
                               "range end");
    const long step = colon == std::string::npos ? 1 : parse_long(t.substr(colon + 1), "range step");
    require(step >= 1 && hi >= lo, "range must satisfy start <= end and step >= 1");
    require((hi - lo) / step < 1000000, "range too long");
    for (long v = lo; v <= hi; v += step) out.push_back(static_cast<int>(v));
    return out;
  }
  for (const auto& part : split(t, ',')) out.push_back(static_cast<int>(parse_long(part, "integer list")));
  return out;
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  return parse_int_list(get(key));
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key,
                                                std::vector<int> fallback) const {
  return has(key) ? get_int_list(key) : fallback;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(get(key), ',')) out.push_back(parse_real(part, key));
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "subcommand", "system", "measure", "probs", "columns", "spec", "a1", "a2", "k", "N",
      "depth", "tol", "seed", "output", "n_grid", "delta", "deltas", "tolerance", "k_max",
      "method", "step", "s", "n_max", "samples", "trajectories", "points", "gap_tol",
      "mean_tol", "alpha", "beta", "given", "omega_samples", "driver.kind", "driver.alpha",
      "driver.matrix", "driver.window", "fiber.kind", "log_base", "scales",
      "sample_depth", "emit_points", "id", "all", "data_dir"};
  return keys;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (!seen.insert(key).second)
      throw InvalidInput("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    cfg.set(key, t.substr(eq + 1));
  }
  if (cfg.subcommand().empty()) throw InvalidInput("config has no subcommand");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Input helpers shared by the subcommands.

namespace {

SymbolicSystem system_from(const ExperimentConfig& cfg) {
  if (cfg.has("system")) return load_system(cfg.get("system"));
  if (cfg.has("columns")) {
    const auto counts = parse_int_list(cfg.get("columns"));
    const auto cols = ColumnStructure::from_counts(counts);
    return SymbolicSystem::with_induced_factor(Sft::full(cols.alphabet_size()), cols.table());
  }
  throw InvalidInput("missing required key 'system' (or 'columns')");
}

Measure measure_from(const ExperimentConfig& cfg, const Sft* sft) {
  if (cfg.has("measure")) return load_measure(cfg.get("measure"));
  if (cfg.has("probs")) {
    std::vector<double> p;
    for (const auto& part : split(cfg.get("probs"), ',')) p.push_back(parse_real(part, "probs"));
    return BernoulliMeasure(std::move(p));
  }
  if (sft && sft->is_full()) return BernoulliMeasure::uniform(sft->size());
  throw InvalidInput("missing required key 'measure' (or 'probs')");
}

WeightVector weights_from(const ExperimentConfig& cfg) {
  return {cfg.get_double("a1", 1.0), cfg.get_double("a2", 0.0)};
}

double log_scale(const ExperimentConfig& cfg) {
  const std::string base = cfg.get("log_base", "e");
  if (base == "e") return 1.0;
  if (base == "2") return 1.0 / std::numbers::ln2;
  if (base == "10") return 1.0 / std::numbers::ln10;
  throw InvalidInput("log_base must be one of e, 2, 10");
}

json weights_json(const WeightVector& a) { return {{"a1", a.a1()}, {"a2", a.a2()}}; }

json probs_json(const Measure& m) {
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) return b->probs();
  const auto& mk = std::get<MarkovMeasure>(m);
  json rows = json::array();
  for (int i = 0; i < mk.size(); ++i) {
    std::vector<double> row;
    for (int j = 0; j < mk.size(); ++j) row.push_back(mk.transition(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

CoverProblem cover_problem_from(const ExperimentConfig& cfg, const WeightVector& a) {
  CoverProblem p;
  p.resolution_k = cfg.get_int("k", 0);
  p.depth_cap = cfg.get_int("depth", 12);
  require(p.resolution_k >= 0, "k must be nonnegative");
  require(p.depth_cap >= 1 && p.depth_cap <= 64, "depth must lie in [1, 64]");
  p.min_order = cfg.has("N") ? cfg.get_int("N") : default_min_order(a, p.resolution_k, p.depth_cap);
  return p;
}

CylinderPartition partition_from(const std::string& text) {
  if (text.empty() || text == "trivial") return {};
  const auto parts = split(text, ':');
  require(parts.size() == 2 || parts.size() == 3, "partition must be 'begin:end' or 'begin:end:f'");
  CylinderPartition p;
  p.begin = static_cast<int>(parse_long(parts[0], "partition begin"));
  p.end = static_cast<int>(parse_long(parts[1], "partition end"));
  if (parts.size() == 3) {
    require(parts[2] == "f" || parts[2] == "s", "partition level must be 's' or 'f'");
    p.factor = parts[2] == "f";
  }
  return p;
}

Eigen::MatrixXd matrix_from(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(text, ';')) {
    std::vector<double> r;
    std::istringstream in(row);
    std::string tok;
    while (in >> tok) r.push_back(parse_real(tok, "driver.matrix"));
    rows.push_back(std::move(r));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) == n,
            "driver.matrix must be square");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      require(v >= 0.0, "driver.matrix entries must be nonnegative");
      m(i, j) = v;
    }
    require(std::abs(m.row(i).sum() - 1.0) <= kProbabilityTolerance, "driver.matrix rows must sum to 1");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Subcommands.

Outcome entropy_bernoulli(const ExperimentConfig& cfg) {
  const Measure m = measure_from(cfg, nullptr);
  const auto* b = std::get_if<BernoulliMeasure>(&m);
  require(b != nullptr, "entropy bernoulli needs a Bernoulli measure");
  const double scale = log_scale(cfg);
  const double h = bernoulli_entropy(*b) * scale;
  Outcome out;
  out.records.push_back({{"record", "entropy"}, {"kind", "bernoulli"}, {"value", h},
                         {"log_base", cfg.get("log_base", "e")}, {"probs", b->probs()}});
  out.summary = "entropy " + fmt6(h);
  return out;
}

Outcome entropy_markov(const ExperimentConfig& cfg) {
  Measure m = measure_from(cfg, nullptr);
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) m = MarkovMeasure::from_bernoulli(*b);
  if (cfg.has("system")) check_support(m, load_system(cfg.get("system")).source());
  const auto& mk = std::get<MarkovMeasure>(m);
  const double scale = log_scale(cfg);
  const double h = markov_entropy(mk) * scale;
  Outcome out;
  std::vector<double> pi(mk.stationary().data(), mk.stationary().data() + mk.size());
  out.records.push_back({{"record", "entropy"}, {"kind", "markov"}, {"value", h},
                         {"log_base", cfg.get("log_base", "e")}, {"stationary", pi}});
  out.summary = "entropy " + fmt6(h);
  return out;
}

Outcome entropy_hidden_factor(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  Measure m = measure_from(cfg, &sys.source());
  check_support(m, sys.source());
  if (const auto* b = std::get_if<BernoulliMeasure>(&m)) m = MarkovMeasure::from_bernoulli(*b);
  const int k_max = cfg.get_int("k_max", 14);
  const double tol = cfg.get_double("tol", 1e-10);
  require(k_max >= 1, "k_max must be at least 1");
  require(tol > 0.0, "tol must be positive");
  const auto r = hidden_markov_entropy_bounds(std::get<MarkovMeasure>(m), sys.code(), k_max, tol);
  const double scale = log_scale(cfg);
  Outcome out;
  out.records.push_back({{"record", "factor_entropy"},
                         {"lower", r.interval.lower * scale},
                         {"upper", r.interval.upper * scale},
                         {"k_reached", r.k_reached},
                         {"converged", r.converged},
                         {"log_base", cfg.get("log_base", "e")}});
  out.summary = "factor entropy in [" + fmt6(r.interval.lower * scale) + ", " +
                fmt6(r.interval.upper * scale) + "]" + (r.converged ? "" : " (not converged)");
  return out;
}

Outcome entropy_weighted_cover(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const auto a = weights_from(cfg);
  const auto problem = cover_problem_from(cfg, a);
  const double tol = cfg.get_double("tol", 1e-3);
  const auto br = critical_exponent(sys, a, problem, tol);
  Outcome out;
  for (const auto& t : br.trace) {
    out.records.push_back({{"s", t.s}, {"depth", t.depth}, {"cost", t.cost}});
    out.trace.push_back({{"s", t.s}, {"depth", t.depth}, {"cost", t.cost}, {"elapsed_ms", t.elapsed_ms}});
  }
  json rec = {{"record", "bracket"},
              {"s_low", br.s_low},
              {"s_high", br.s_high},
              {"cost_low", br.cost_low},
              {"cost_high", br.cost_high},
              {"zero_entropy", br.zero_entropy},
              {"k", problem.resolution_k},
              {"N", problem.min_order},
              {"depth", problem.depth_cap},
              {"bias", "lower-bound (depth truncation)"},
              {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.summary = "bracket [" + fmt6(br.s_low) + ", " + fmt6(br.s_high) + "]" +
                (br.zero_entropy ? " (zero entropy)" : "");
  return out;
}

Outcome entropy_katok(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const auto a = weights_from(cfg);
  const int k = cfg.get_int("k", 0);
  const auto grid = cfg.get_int_list("n_grid", parse_int_list("4..14"));
  const double delta = cfg.get_double("delta", 0.5);
  const auto est = katok_entropy_estimate(sys, m, a, k, grid, delta);
  const double scale = log_scale(cfg);
  Outcome out;
  std::string csv = "n,count\n";
  for (std::size_t i = 0; i < est.ns.size(); ++i) {
    out.records.push_back({{"n", est.ns[i]}, {"count", est.counts[i]},
                           {"log_count", std::log(static_cast<double>(est.counts[i]))}});
    csv += std::to_string(est.ns[i]) + "," + std::to_string(est.counts[i]) + "\n";
  }
  json rec = {{"record", "katok_estimate"}, {"slope", est.slope * scale}, {"intercept", est.intercept},
              {"k", k}, {"delta", delta}, {"log_base", cfg.get("log_base", "e")},
              {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.csv = csv;
  out.summary = "katok slope " + fmt6(est.slope * scale);
  return out;
}

Outcome variational_optimize(const ExperimentConfig& cfg) {
  std::optional<ColumnStructure> cols;
  std::optional<WeightVector> a;
  std::optional<SymbolicSystem> sys;
  if (cfg.has("spec")) {
    const auto spec = load_carpet(cfg.get("spec"));
    cols = spec.columns();
    a = carpet_weights(spec);
  } else {
    sys = system_from(cfg);
    if (sys->source().is_full()) cols = ColumnStructure::from_code(sys->code());
  }
  if (cfg.has("a1") || cfg.has("a2") || !a) a = weights_from(cfg);
  const std::string method = cfg.get("method", "closed-form");
  const double scale = log_scale(cfg);
  Outcome out;
  if (!cols) {
    const auto r = variational_optimum(*sys, *a, cfg.get_seed(0));
    json rec = {{"record", "variational"}, {"value", r.value.lower * scale},
                {"value_upper", r.value.upper * scale}, {"optimizer", probs_json(r.optimizer)},
                {"method", std::string(method_name(r.method))}, {"converged", r.converged},
                {"log_base", cfg.get("log_base", "e")}};
    rec.update(weights_json(*a));
    out.records.push_back(rec);
    out.summary = "variational value in [" + fmt6(r.value.lower * scale) + ", " +
                  fmt6(r.value.upper * scale) + "]";
    return out;
  }
  VariationalResult r;
  if (method == "closed-form") {
    r = lagrange_optimum(*cols, *a);
  } else if (method == "gradient") {
    r = projected_gradient(*cols, *a, cfg.get_double("tol", 1e-9), cfg.get_seed(0));
  } else if (method == "grid") {
    r = grid_oracle(*cols, *a, cfg.get_double("step", 0.005));
  } else {
    throw InvalidInput("method must be closed-form, gradient or grid");
  }
  json rec = {{"record", "variational"}, {"value", r.value * scale},
              {"optimizer_probs", r.optimizer.probs()}, {"method", std::string(method_name(r.method))},
              {"converged", r.converged}, {"log_base", cfg.get("log_base", "e")}};
  rec.update(weights_json(*a));
  out.records.push_back(rec);
  std::string csv = "a1,a2,value,method";
  for (int d = 0; d < r.optimizer.size(); ++d) csv += ",p" + std::to_string(d);
  csv += "\n" + format_double(a->a1()) + "," + format_double(a->a2()) + "," +
         format_double(r.value * scale) + "," + std::string(method_name(r.method));
  for (double p : r.optimizer.probs()) csv += "," + format_double(p);
  out.csv = csv + "\n";
  out.summary = "variational value " + fmt6(r.value * scale);
  return out;
}

Outcome variational_gap(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const auto a = weights_from(cfg);
  const auto problem = cover_problem_from(cfg, a);
  const auto r = variational_gap_report(sys, a, problem, cfg.get_double("tol", 1e-3),
                                        cfg.get_seed(0), cfg.get_double("tolerance", 0.01));
  Outcome out;
  json rec = {{"record", "variational_gap"},
              {"variational_value", r.variational.lower},
              {"variational_upper", r.variational.upper},
              {"s_low", r.bracket.s_low},
              {"s_high", r.bracket.s_high},
              {"gap", r.gap},
              {"lower_bound_consistent", r.lower_bound_consistent},
              {"slack", r.slack},
              {"k", problem.resolution_k},
              {"N", problem.min_order},
              {"depth", problem.depth_cap},
              {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.pass = r.lower_bound_consistent;
  out.summary = "variational " + fmt6(r.variational.lower) + ", bracket [" + fmt6(r.bracket.s_low) +
                ", " + fmt6(r.bracket.s_high) + "], gap " + fmt6(r.gap);
  return out;
}

Outcome dimension_carpet(const ExperimentConfig& cfg) {
  const auto spec = load_carpet(cfg.get("spec"));
  const auto a = carpet_weights(spec);
  const double dim = carpet_dimension(spec);
  Outcome out;
  json rec = {{"record", "carpet_dimension"}, {"m1", spec.m1()}, {"m2", spec.m2()},
              {"digits", spec.digits().size()}, {"dimension", dim}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.summary = fmt6(dim);
  return out;
}

Outcome dimension_box_count(const ExperimentConfig& cfg) {
  const auto spec = load_carpet(cfg.get("spec"));
  const int count = cfg.get_int("points", 200000);
  const int depth = cfg.get_int("sample_depth", 40);
  require(count >= 1, "points must be positive");
  const auto scales = cfg.get_int_list("scales", parse_int_list("2..8"));
  const auto pts = sample_carpet_points(spec, static_cast<std::size_t>(count), depth, cfg.get_seed(0));
  const auto r = box_counting_dimension(pts, spec.m1(), spec.m2(), scales);
  Outcome out;
  std::string csv = "k,l,log_inv_delta,occupied\n";
  for (const auto& row : r.rows) {
    out.records.push_back({{"k", row.k}, {"l", row.l}, {"log_inv_delta", row.log_inv_delta},
                           {"occupied", row.occupied}});
    csv += std::to_string(row.k) + "," + std::to_string(row.l) + "," + format_double(row.log_inv_delta) +
           "," + std::to_string(row.occupied) + "\n";
  }
  out.records.push_back({{"record", "box_dimension"}, {"dimension", r.dimension},
                         {"hausdorff", carpet_dimension(spec)}, {"points", count}});
  out.csv = csv;
  if (cfg.get("emit_points", "0") == "1") out.points_csv = format_points_csv(pts);
  out.summary = "box dimension " + fmt6(r.dimension);
  return out;
}

Driver driver_from(const ExperimentConfig& cfg, std::string& warning) {
  const std::string kind = cfg.get("driver.kind", "rotation");
  if (kind == "rotation") {
    const std::string alpha = cfg.get("driver.alpha", "golden");
    if (alpha == "golden") return Driver::golden_rotation();
    if (alpha == "silver") return Driver::rotation(kSilverRotation, true);
    warning = "warning: driver.alpha is a float and therefore rational";
    return Driver::rotation(parse_real(alpha, "driver.alpha"));
  }
  if (kind == "markov") return Driver::markov_shift(matrix_from(cfg.get("driver.matrix")), cfg.get_int("driver.window", 8));
  throw InvalidInput("driver.kind must be rotation or markov");
}

json omega_json(const DriverPoint& w, const Driver& d) {
  if (d.kind() == Driver::Kind::rotation) return w.angle;
  return w.window;
}

Outcome rds_fiber_entropy(const ExperimentConfig& cfg) {
  std::string warning;
  const Driver driver = driver_from(cfg, warning);
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const std::string fiber = cfg.get("fiber.kind", "constant");
  require(fiber == "constant" || fiber == "relabel", "fiber.kind must be constant or relabel");
  const SymbolicBundle bundle(driver, sys, m,
                              fiber == "constant" ? SymbolicBundle::Twist::constant
                                                  : SymbolicBundle::Twist::relabel);
  const auto a = weights_from(cfg);
  const int k = cfg.get_int("k", 0);
  const auto grid = cfg.get_int_list("n_grid", parse_int_list("4..14"));
  const double delta = cfg.get_double("delta", 0.5);
  const auto r = fiber_katok_entropy(bundle, a, cfg.get_int("omega_samples", 32), k, grid, delta,
                                     cfg.get_seed(0));
  Outcome out;
  for (const auto& f : r.fibers)
    out.records.push_back({{"record", "fiber"}, {"omega", omega_json(f.omega, driver)},
                           {"twist", f.twist}, {"slope", f.estimate.slope}, {"counts", f.estimate.counts}});
  json rec = {{"record", "integrated"}, {"mean", r.mean}, {"spread", r.spread}, {"stddev", r.stddev},
              {"omega_samples", r.fibers.size()}, {"k", k}, {"delta", delta},
              {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.summary = (warning.empty() ? "" : warning + "\n") + "integrated " + fmt6(r.mean) + ", spread " +
                fmt6(r.spread);
  return out;
}

Outcome rds_frostman(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const auto a = weights_from(cfg);
  const int samples = cfg.get_int("samples", 10000);
  require(samples >= 1, "samples must be positive");
  const auto r = frostman_check(sys, m, a, cfg.get_double("s"), cfg.get_int("k", 0), cfg.get_int("N", 20),
                                cfg.get_int("n_max", 60), static_cast<std::size_t>(samples), cfg.get_seed(0));
  Outcome out;
  json rec = {{"record", "frostman"}, {"s", cfg.get_double("s")}, {"samples", r.samples},
              {"n_min", r.n_min}, {"n_max", r.n_max}, {"violations", r.violations},
              {"points_violating", r.points_violating}, {"max_log_ratio", r.max_log_ratio},
              {"per_order", r.per_order}, {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.summary = std::to_string(r.violations) + " violations over " + std::to_string(r.samples) + " samples";
  return out;
}

std::string series_csv(const ConvergenceSeries& s) {
  std::string csv = "n,value,ci\n";
  for (std::size_t i = 0; i < s.ns.size(); ++i)
    csv += std::to_string(s.ns[i]) + "," + format_double(s.values[i]) + "," +
           format_double(s.ci_halfwidth[i]) + "\n";
  return csv;
}

double distance_to(const EntropyInterval& t, double v) {
  return v < t.lower ? t.lower - v : (v > t.upper ? v - t.upper : 0.0);
}

Outcome validate_smb(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const auto a = weights_from(cfg);
  const auto grid = cfg.get_int_list("n_grid", parse_int_list("100..2000:100"));
  const auto r = smb_series(m, sys.code(), a, grid, cfg.get_int("trajectories", 200), cfg.get_seed(0));
  const auto tail = tail_summary(r.series.values);
  const double last = r.series.values.back();
  const double ci = r.series.ci_halfwidth.back();
  Outcome out;
  out.pass = distance_to(r.series.target, last) <= ci;
  out.csv = series_csv(r.series);
  json rec = {{"record", "smb"}, {"target", {r.series.target.lower, r.series.target.upper}},
              {"value", last}, {"ci", ci}, {"tail_gap", tail.gap()}, {"zm_max", r.zm_max},
              {"pass", out.pass}, {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.summary = "smb " + fmt6(last) + " +- " + fmt6(ci) + " target " + fmt6(r.series.target.lower) +
                (out.pass ? " pass" : " FAIL");
  return out;
}

Outcome validate_brin_katok(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const auto a = weights_from(cfg);
  const auto grid = cfg.get_int_list("n_grid", parse_int_list("100..2000:100"));
  const auto r = brin_katok_series(m, sys.code(), a, cfg.get_int("k", 0), grid, cfg.get_int("points", 200),
                                   cfg.get_seed(0));
  const double gap_tol = cfg.get_double("gap_tol", 0.05);
  const double mean_tol = cfg.get_double("mean_tol", 0.03);
  Outcome out;
  out.pass = r.tail.gap() < gap_tol && distance_to(r.series.target, r.tail.mean) <= mean_tol;
  out.csv = series_csv(r.series);
  json rec = {{"record", "brin_katok"}, {"target", {r.series.target.lower, r.series.target.upper}},
              {"tail_min", r.tail.min}, {"tail_max", r.tail.max}, {"tail_gap", r.tail.gap()},
              {"tail_mean", r.tail.mean}, {"point_tail_gap", r.point_tail_gap}, {"pass", out.pass},
              {"k", cfg.get_int("k", 0)}, {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.summary = "brin-katok tail mean " + fmt6(r.tail.mean) + ", gap " + fmt6(r.tail.gap()) +
                (out.pass ? " pass" : " FAIL");
  return out;
}

Outcome validate_katok_delta(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const auto a = weights_from(cfg);
  const auto grid = cfg.get_int_list("n_grid", parse_int_list("4..14"));
  const std::vector<double> deltas =
      cfg.has("deltas") ? cfg.get_double_list("deltas") : std::vector<double>{0.1, 0.5, 0.9};
  const auto r = katok_delta_report(sys, m, a, cfg.get_int("k", 0), grid, deltas,
                                    cfg.get_double("tolerance", 0.03));
  Outcome out;
  out.pass = r.pass;
  std::string csv = "delta,slope\n";
  for (std::size_t i = 0; i < r.deltas.size(); ++i) {
    out.records.push_back({{"delta", r.deltas[i]}, {"slope", r.estimates[i].slope},
                           {"counts", r.estimates[i].counts}});
    csv += format_double(r.deltas[i]) + "," + format_double(r.estimates[i].slope) + "\n";
  }
  json rec = {{"record", "katok_delta"}, {"max_pairwise", r.max_pairwise}, {"pass", r.pass},
              {"metric", std::string(kMetricDescription)}};
  rec.update(weights_json(a));
  out.records.push_back(rec);
  out.csv = csv;
  out.summary = "max pairwise slope difference " + fmt6(r.max_pairwise) + (r.pass ? " pass" : " FAIL");
  return out;
}

Outcome validate_chain_rule(const ExperimentConfig& cfg) {
  const auto sys = system_from(cfg);
  const Measure m = measure_from(cfg, &sys.source());
  const auto r = chain_rule_check(m, sys.code(), partition_from(cfg.get("alpha", "0:2")),
                                  partition_from(cfg.get("beta", "0:3")), partition_from(cfg.get("given", "")));
  Outcome out;
  out.pass = r.pass;
  out.records.push_back({{"record", "chain_rule"}, {"atoms", r.atoms}, {"max_residual", r.max_residual},
                         {"pass", r.pass}});
  out.summary = "chain rule residual " + format_double(r.max_residual) + (r.pass ? " pass" : " FAIL");
  return out;
}

Outcome reproduce(const ExperimentConfig& cfg) {
  const std::string data = cfg.get("data_dir", default_data_dir());
  std::vector<AcceptanceCase> cases;
  if (cfg.get("all", "0") == "1") {
    cases = acceptance_cases();
  } else {
    const std::string id = cfg.get("id");
    auto c = find_acceptance_case(id);
    if (!c) throw InvalidInput("unknown acceptance id '" + id + "'");
    cases.push_back(*c);
  }
  Outcome out;
  for (const auto& c : cases) {
    const auto r = run_acceptance(c, data);
    out.pass = out.pass && r.pass;
    out.records.push_back({{"id", r.id}, {"pass", r.pass}, {"detail", r.detail}});
    out.trace.push_back({{"id", r.id}, {"seconds", r.seconds}, {"limit_seconds", r.limit_seconds}});
    char line[64];
    std::snprintf(line, sizeof line, "%-6s %-4s %8.2fs  ", r.id.c_str(), r.pass ? "PASS" : "FAIL", r.seconds);
    out.summary += line + r.detail + "\n";
  }
  if (!out.summary.empty()) out.summary.pop_back();
  return out;
}

using Handler = std::function<Outcome(const ExperimentConfig&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"entropy bernoulli", entropy_bernoulli},
      {"entropy markov", entropy_markov},
      {"entropy hidden-factor", entropy_hidden_factor},
      {"entropy weighted-cover", entropy_weighted_cover},
      {"entropy katok", entropy_katok},
      {"variational optimize", variational_optimize},
      {"variational gap", variational_gap},
      {"dimension carpet", dimension_carpet},
      {"dimension box-count", dimension_box_count},
      {"rds fiber-entropy", rds_fiber_entropy},
      {"rds frostman", rds_frostman},
      {"validate smb", validate_smb},
      {"validate brin-katok", validate_brin_katok},
      {"validate katok-delta", validate_katok_delta},
      {"validate chain-rule", validate_chain_rule},
      {"reproduce", reproduce},
  };
  return table;
}

}  // namespace

Outcome execute(const ExperimentConfig& cfg) {
  const auto& table = handlers();
  const auto it = table.find(cfg.subcommand());
  if (it == table.end()) throw InvalidInput("unknown subcommand '" + cfg.subcommand() + "'");
  return it->second(cfg);
}

std::string to_json_lines(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

std::string code_version() { return std::string("wbe ") + WBE_VERSION; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw InvariantViolation("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

json manifest_to_json(const RunManifest& m) {
  json config = m.config.values();
  config["subcommand"] = m.config.subcommand();
  json timings = json::array();
  for (const auto& [op, ms] : m.timings) timings.push_back({{"op", op}, {"ms", ms}});
  json outputs = json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return {{"config", config}, {"code_version", m.code_version}, {"wall_ms", m.wall_ms},
          {"timings", timings}, {"outputs", outputs}};
}

namespace {

std::string stem_of(const std::string& output) {
  const std::string ext = ".jsonl";
  if (output.size() > ext.size() && output.compare(output.size() - ext.size(), ext.size(), ext) == 0)
    return output.substr(0, output.size() - ext.size());
  return output;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  RunResult result;
  result.outcome = execute(cfg);
  const double compute_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  if (!cfg.has("output")) return result;

  const std::string output = cfg.get("output");
  const std::string stem = stem_of(output);
  RunManifest manifest;
  manifest.config = cfg;
  manifest.code_version = code_version();
  manifest.timings.emplace_back(cfg.subcommand(), compute_ms);
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back(output, to_json_lines(result.outcome.records));
  if (result.outcome.csv) files.emplace_back(stem + ".csv", *result.outcome.csv);
  if (result.outcome.points_csv) files.emplace_back(stem + ".points.csv", *result.outcome.points_csv);
  if (!result.outcome.trace.empty()) files.emplace_back(stem + ".trace.jsonl", to_json_lines(result.outcome.trace));
  for (const auto& [path, contents] : files) {
    write_file_atomic(path, contents);
    manifest.outputs.push_back({path, sha256_hex(contents), contents.size()});
  }
  manifest.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  write_file_atomic(stem + ".manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  result.manifest = std::move(manifest);
  return result;
}

ManifestCheck verify_manifest(const std::string& manifest_path) {
  json m;
  try {
    m = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw InvalidInput("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!m.contains("outputs") || !m["outputs"].is_array()) throw InvalidInput("manifest has no outputs list");
  ManifestCheck check;
  for (const auto& o : m["outputs"]) {
    const std::string path = o.at("path").get<std::string>();
    std::string actual;
    try {
      actual = sha256_hex(read_text_file(path));
    } catch (const InvalidInput&) {
      check.ok = false;
      check.mismatches.push_back(path + ": missing");
      continue;
    }
    if (actual != o.at("sha256").get<std::string>()) {
      check.ok = false;
      check.mismatches.push_back(path + ": digest mismatch");
    }
  }
  return check;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidInput*>(&e)) return 2;
  if (dynamic_cast<const Refusal*>(&e)) return 3;
  if (dynamic_cast<const json::exception*>(&e)) return 2;
  return 1;
}

}  // namespace wbe
