#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "wbe/errors.hpp"
#include "wbe/measures.hpp"
#include "wbe/rng.hpp"
#include "wbe/variational.hpp"

using namespace wbe;
using doctest::Approx;

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) total += (x = 0.01 + rng.uniform());
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace

TEST_SUITE("variational") {

TEST_CASE("column structures") {
  const auto cols = ColumnStructure::from_counts(std::vector<int>{1, 2});
  CHECK(cols.columns == std::vector<std::vector<Symbol>>{{0}, {1, 2}});
  CHECK(cols.alphabet_size() == 3);
  CHECK(cols.table() == std::vector<Symbol>{0, 1, 1});
  CHECK(ColumnStructure::from_code(wbe::test::column3().code()).counts() == std::vector<int>{1, 2});
  CHECK_THROWS_AS(ColumnStructure::from_counts(std::vector<int>{1, 0}), InvalidInput);
}

TEST_CASE("objective by hand") {
  const auto cols = ColumnStructure::from_counts(std::vector<int>{1, 2});
  const std::vector<double> u = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(variational_objective(cols, {1, 1}, u) == Approx(1.735126).epsilon(1e-6));
  CHECK(variational_objective(cols, {1, 0}, u) == Approx(std::log(3.0)));
}

TEST_CASE("closed form") {
  const auto cols = ColumnStructure::from_counts(std::vector<int>{1, 2});
  const auto r = lagrange_optimum(cols, {1, 1});
  CHECK(r.value == Approx(2 * std::log(1 + std::numbers::sqrt2)).epsilon(1e-12));
  CHECK(r.value == Approx(1.762747).epsilon(1e-6));
  const double q0 = 1 / (1 + std::numbers::sqrt2);
  CHECK(r.optimizer[0] == Approx(q0));
  CHECK(r.optimizer[1] + r.optimizer[2] == Approx(1 - q0));
  CHECK(r.optimizer[1] == Approx(r.optimizer[2]));

  const auto flat = lagrange_optimum(cols, {1, 0});
  CHECK(flat.value == Approx(std::log(3.0)));
  for (double p : flat.optimizer.probs()) CHECK(p == Approx(1.0 / 3));

  const auto sym = lagrange_optimum(ColumnStructure::from_counts(std::vector<int>{2, 2}), {1, 1});
  CHECK(sym.value == Approx(2 * std::log(2 * std::numbers::sqrt2)));
  CHECK(sym.value == Approx(std::log(4.0) + std::log(2.0)));
}

TEST_CASE("closed form agrees with the grid oracle") {
  Rng rng(derive_seed(41, 0));
  const std::vector<std::vector<int>> shapes = {{1, 2}, {2, 2}, {1, 3}, {1, 1, 2}, {2, 3}};
  for (const auto& shape : shapes) {
    const auto cols = ColumnStructure::from_counts(shape);
    const WeightVector a(0.2 + rng.uniform(), rng.uniform());
    const double step = cols.alphabet_size() <= 4 ? 0.01 : 0.02;
    const auto grid = grid_oracle(cols, a, step);
    const auto exact = lagrange_optimum(cols, a);
    CHECK(grid.value <= exact.value + 1e-12);
    CHECK(exact.value - grid.value <= 2e-3);
  }
  const auto cols = ColumnStructure::from_counts(std::vector<int>{1, 2});
  CHECK(std::abs(grid_oracle(cols, {1, 1}, 0.005).value - 1.7627) <= 0.001);
  CHECK_THROWS_AS(grid_oracle(ColumnStructure::from_counts(std::vector<int>{3, 3}), {1, 1}, 0.01), Refusal);
  CHECK_THROWS_AS(grid_oracle(cols, {1, 1}, 0.3), InvalidInput);
}

TEST_CASE("projected gradient reaches the closed form") {
  Rng rng(derive_seed(42, 0));
  for (int t = 0; t < 10; ++t) {
    std::vector<int> counts(2 + rng.below(3));
    for (auto& c : counts) c = 1 + static_cast<int>(rng.below(3));
    const auto cols = ColumnStructure::from_counts(counts);
    const WeightVector a(0.2 + rng.uniform(), 2 * rng.uniform());
    const auto g = projected_gradient(cols, a, 1e-9, derive_seed(42, static_cast<std::uint64_t>(t) + 1));
    const auto exact = lagrange_optimum(cols, a);
    CHECK(g.converged);
    CHECK(g.value == Approx(exact.value).epsilon(1e-8));
    // The optimum dominates the uniform measure and random points.
    const std::vector<double> u(static_cast<std::size_t>(cols.alphabet_size()), 1.0 / cols.alphabet_size());
    CHECK(exact.value >= variational_objective(cols, a, u) - 1e-12);
    for (int r = 0; r < 5; ++r)
      CHECK(exact.value >= variational_objective(cols, a, random_simplex(rng, u.size())) - 1e-12);
  }
}

TEST_CASE("simplex projection") {
  Rng rng(derive_seed(43, 0));
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + rng.below(6));
    for (auto& x : v) x = 4 * rng.uniform() - 2;
    const auto p = project_to_simplex(v);
    double total = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      total += x;
    }
    CHECK(total == Approx(1.0));
    const auto again = project_to_simplex(p);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(again[i] == Approx(p[i]).epsilon(1e-15));
  }
  const std::vector<double> inside = {0.2, 0.3, 0.5};
  const auto same = project_to_simplex(inside);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == Approx(inside[i]));
}

TEST_CASE("objective is concave") {
  Rng rng(derive_seed(44, 0));
  const auto cols = ColumnStructure::from_counts(std::vector<int>{1, 2, 2});
  for (int t = 0; t < 100; ++t) {
    const WeightVector a(0.1 + rng.uniform(), rng.uniform());
    const auto p = random_simplex(rng, 5);
    const auto q = random_simplex(rng, 5);
    const double lambda = rng.uniform();
    std::vector<double> mix(5);
    for (std::size_t i = 0; i < 5; ++i) mix[i] = lambda * p[i] + (1 - lambda) * q[i];
    CHECK(variational_objective(cols, a, mix) >=
          lambda * variational_objective(cols, a, p) + (1 - lambda) * variational_objective(cols, a, q) - 1e-12);
  }
}

TEST_CASE("variational optimum on systems") {
  const auto full = variational_optimum(wbe::test::column3(), {1, 1}, 0);
  CHECK(full.method == VariationalMethod::closed_form);
  CHECK(full.value.lower == Approx(2 * std::log(1 + std::numbers::sqrt2)));

  const auto gm = variational_optimum(wbe::test::golden(), {1, 0.5}, 0);
  const double h = topological_entropy(wbe::test::golden().source());
  CHECK(gm.value.lower == Approx(1.5 * h));
  CHECK(gm.value.upper == Approx(1.5 * h));

  // Golden mean with a collapsing code: the search result is a certified lower bound.
  const auto sys = SymbolicSystem::with_induced_factor(
      make_sft(3, {{true, true, true}, {true, false, true}, {true, true, false}}), {0, 1, 1});
  const auto r = variational_optimum(sys, {1, 1}, 7, 100);
  CHECK(r.method == VariationalMethod::markov_search);
  CHECK(r.value.lower <= r.value.upper);
  CHECK(r.value.lower > 0.0);
  const auto again = variational_optimum(sys, {1, 1}, 7, 100);
  CHECK(again.value.lower == r.value.lower);
}

TEST_CASE("gap report") {
  CoverProblem p;
  p.depth_cap = 20;
  p.min_order = default_min_order({1, 1}, 0, 20);
  const auto r = variational_gap_report(wbe::test::column3(), {1, 1}, p, 1e-3, 0);
  CHECK(r.gap <= 0.05);
  CHECK(r.lower_bound_consistent);

  CoverProblem q;
  q.depth_cap = 16;
  const auto flat = variational_gap_report(wbe::test::full2(), {1, 0}, q, 1e-3, 0);
  CHECK(flat.gap <= 2e-3);
}

TEST_CASE("method names") {
  CHECK(method_name(VariationalMethod::closed_form) == "closed-form");
  CHECK(method_name(VariationalMethod::grid) == "grid");
}

}
