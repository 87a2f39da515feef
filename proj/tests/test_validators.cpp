#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "wbe/measures.hpp"
#include "wbe/rng.hpp"
#include "wbe/validators.hpp"

using namespace wbe;
using doctest::Approx;

TEST_SUITE("validators") {

TEST_CASE("tail summary covers the final third") {
  const std::vector<double> v = {9, 9, 9, 1, 2, 3, 4, 5, 6};
  const auto t = tail_summary(v);
  CHECK(t.min == 4);
  CHECK(t.max == 6);
  CHECK(t.mean == Approx(5.0));
  CHECK(t.gap() == 2);
}

TEST_CASE("SMB on the fair coin") {
  const auto sys = wbe::test::full2();
  const Measure u = BernoulliMeasure::uniform(2);
  const std::vector<int> grid = {500, 1000, 2000};
  const auto r = smb_series(u, sys.code(), {1, 0}, grid, 50, 1);
  for (double v : r.series.values) CHECK(v == Approx(std::numbers::ln2));
  CHECK(r.series.target.lower == Approx(std::numbers::ln2));
}

TEST_CASE("SMB on the column system") {
  const auto sys = wbe::test::column3();
  const Measure u = BernoulliMeasure::uniform(3);
  const std::vector<int> grid = {500, 1000, 2000};
  const auto r = smb_series(u, sys.code(), {1, 1}, grid, 200, 2);
  CHECK(r.series.target.lower == Approx(1.735126).epsilon(1e-6));
  CHECK(std::abs(r.series.values.back() - r.series.target.lower) <= r.series.ci_halfwidth.back());
  CHECK(r.series.ci_halfwidth.back() < 0.02);
  CHECK(r.zm_max <= 0.05);
  // Same seed, same series.
  CHECK(smb_series(u, sys.code(), {1, 1}, grid, 200, 2).series.values == r.series.values);
}

TEST_CASE("SMB on a deterministic measure") {
  const auto r = smb_series(Measure(BernoulliMeasure({0.0, 1.0})), wbe::test::full2().code(), {1, 0},
                            std::vector<int>{10, 20}, 5, 3);
  for (double v : r.series.values) CHECK(v == 0.0);
}

TEST_CASE("Brin-Katok series") {
  const auto full = wbe::test::full2();
  const std::vector<int> grid = {10, 20, 40, 80};
  const auto fair = brin_katok_series(Measure(BernoulliMeasure::uniform(2)), full.code(), {1, 0}, 0, grid, 20, 1);
  for (double v : fair.series.values) CHECK(v == Approx(std::numbers::ln2));
  CHECK(fair.point_tail_gap == Approx(0.0));

  const std::vector<int> long_grid = {200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000};
  const auto col = brin_katok_series(Measure(BernoulliMeasure::uniform(3)), wbe::test::column3().code(), {1, 1}, 2,
                                     long_grid, 200, 2);
  CHECK(std::abs(col.tail.mean - 1.735126) <= 0.03);
  CHECK(col.tail.gap() < 0.05);

  const auto biased = brin_katok_series(Measure(BernoulliMeasure({0.9, 0.1})), full.code(), {1, 0}, 0, long_grid,
                                        200, 3);
  CHECK(std::abs(biased.tail.mean - 0.325083) <= 0.03);
}

TEST_CASE("Brin-Katok values grow with resolution") {
  const auto sys = wbe::test::column3();
  const Measure u = BernoulliMeasure({0.2, 0.3, 0.5});
  const std::vector<int> grid = {20, 40, 80};
  const auto k0 = brin_katok_series(u, sys.code(), {1, 1}, 0, grid, 30, 4);
  const auto k2 = brin_katok_series(u, sys.code(), {1, 1}, 2, grid, 30, 4);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(k2.series.values[i] >= k0.series.values[i] - 1e-12);
}

TEST_CASE("Katok delta report") {
  const auto sys = wbe::test::full2();
  const std::vector<int> grid = {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  const std::vector<double> deltas = {0.1, 0.5, 0.9};
  const auto r = katok_delta_report(sys, Measure(BernoulliMeasure::uniform(2)), {1, 0}, 0, grid, deltas, 0.03);
  CHECK(r.pass);
  for (const auto& e : r.estimates) CHECK(std::abs(e.slope - std::numbers::ln2) <= 0.03);
  const auto det =
      katok_delta_report(sys, Measure(BernoulliMeasure({1.0, 0.0})), {1, 0}, 0, grid, deltas, 0.03);
  for (const auto& e : det.estimates) CHECK(e.slope == Approx(0.0));
}

TEST_CASE("chain rule") {
  const auto code = wbe::test::column3().code();
  const Measure b = BernoulliMeasure({0.2, 0.3, 0.5});
  const CylinderPartition alpha{0, 2, false};
  CHECK(chain_rule_check(b, code, alpha, alpha, {}).pass);
  CHECK(chain_rule_check(b, code, {0, 1, false}, {1, 2, false}, {}).max_residual <= 1e-12);

  Rng rng(derive_seed(71, 0));
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd p(3, 3);
    for (int i = 0; i < 3; ++i) {
      double total = 0.0;
      for (int j = 0; j < 3; ++j) total += (p(i, j) = 0.05 + rng.uniform());
      p.row(i) /= total;
    }
    const Measure m = MarkovMeasure(p);
    const auto r = chain_rule_check(m, code, {0, 2, false}, {0, 3, false}, {1, 3, true});
    CHECK(r.pass);
    CHECK(r.max_residual <= 1e-10);
    CHECK(r.atoms > 0);
  }
}

}
