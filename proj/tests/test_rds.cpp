#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "wbe/errors.hpp"
#include "wbe/measures.hpp"
#include "wbe/rds.hpp"
#include "wbe/rng.hpp"

using namespace wbe;
using doctest::Approx;

namespace {

SymbolicBundle column_bundle(SymbolicBundle::Twist twist, Driver d = Driver::golden_rotation()) {
  return SymbolicBundle(std::move(d), wbe::test::column3(), BernoulliMeasure({0.2, 0.3, 0.5}), twist);
}

}  // namespace

TEST_SUITE("rds") {

TEST_CASE("rotation driver") {
  const double alpha = 0.3;
  const auto d = Driver::rotation(alpha);
  CHECK_FALSE(d.named_constant());
  CHECK(Driver::golden_rotation().named_constant());
  const auto orbit = driver_orbit(d, DriverPoint{0.0, {}}, 3, 1);
  REQUIRE(orbit.size() == 3);
  CHECK(orbit[0].angle == 0.0);
  CHECK(orbit[1].angle == Approx(alpha));
  CHECK(orbit[2].angle == Approx(std::fmod(2 * alpha, 1.0)));
  CHECK_THROWS_AS(Driver::rotation(1.5), InvalidInput);
}

TEST_CASE("rotation orbits equidistribute") {
  const auto d = Driver::golden_rotation();
  const auto orbit = driver_orbit(d, DriverPoint{0.0, {}}, 100000, 2);
  CHECK(driver_marginal_check(d, orbit).pass);
}

TEST_CASE("Markov driver") {
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const auto constant = Driver::markov_shift(one, 4);
  Rng start(3);
  const auto path = driver_orbit(constant, constant.sample(start), 20, 3);
  for (const auto& w : path) CHECK(w.window == Word(4, 0));

  Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(Driver::markov_shift(identity), InvalidInput);

  Eigen::MatrixXd p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  const auto d = Driver::markov_shift(p, 5);
  Rng rng(4);
  auto w = d.sample(rng);
  const auto next = d.step(w, rng);
  CHECK(std::equal(w.window.begin() + 1, w.window.end(), next.window.begin()));
  std::vector<DriverPoint> sample;
  for (int i = 0; i < 20000; ++i) sample.push_back(d.sample(rng));
  CHECK(driver_marginal_check(d, sample).pass);
}

TEST_CASE("twists relabel inside columns") {
  const auto b = column_bundle(SymbolicBundle::Twist::relabel);
  CHECK(b.relabeling(0) == std::vector<Symbol>{0, 1, 2});
  CHECK(b.relabeling(1) == std::vector<Symbol>{0, 2, 1});
  CHECK(b.relabeling(2) == std::vector<Symbol>{0, 1, 2});
  const auto code = b.system().code();
  for (int r = 0; r < 4; ++r) {
    const auto rho = b.relabeling(r);
    for (Symbol s = 0; s < 3; ++s) CHECK(code(rho[static_cast<std::size_t>(s)]) == code(s));
  }
  const auto c = column_bundle(SymbolicBundle::Twist::constant);
  CHECK(c.twist_of(DriverPoint{0.9, {}}) == 0);
}

TEST_CASE("constant fibers reduce to the shift") {
  const auto b = column_bundle(SymbolicBundle::Twist::constant);
  const Word x = {0, 1, 2, 2, 1};
  const DriverPoint w{0.4, {}};
  const DriverPoint next{std::fmod(0.4 + kGoldenRotation, 1.0), {}};
  CHECK(b.fiber_map(w, next, x) == Word{1, 2, 2, 1});
  const auto orbit = driver_orbit(b.driver(), w, 4, 5);
  CHECK(fiber_iterate(b, orbit, x, 0) == x);
  CHECK(fiber_iterate(b, orbit, x, 2) == Word{2, 2, 1});
}

TEST_CASE("fiber measures are invariant") {
  const auto b = column_bundle(SymbolicBundle::Twist::relabel);
  Rng rng(derive_seed(61, 0));
  for (int t = 0; t < 10; ++t) {
    const auto w = b.driver().sample(rng);
    const auto next = b.driver().step(w, rng);
    CHECK(disintegration_residual(b, w, next, 4) <= 1e-12);
  }
}

TEST_CASE("skew product steps") {
  const auto b = column_bundle(SymbolicBundle::Twist::relabel);
  Rng rng(derive_seed(62, 0));
  SkewState<Word> s{DriverPoint{0.1, {}}, Word{0, 1, 2, 0, 1}};
  const auto t = skew_product_step(b, s, rng);
  CHECK(t.omega.angle == Approx(std::fmod(0.1 + kGoldenRotation, 1.0)));
  CHECK(t.x.size() == 4);
  CHECK(t.x == b.fiber_map(s.omega, t.omega, s.x));
}

TEST_CASE("torus fibers two ways") {
  const TorusBundle b(Driver::golden_rotation(), 2, 3, SkewFunction::linear(0.5, 0.1), TorusBundle::Shift::angle);
  const auto orbit = driver_orbit(b.driver(), DriverPoint{0.2, {}}, 30, 7);
  const TorusPoint x{0.123, 0.456};
  CHECK(fiber_iterate(b, orbit, x, 0).x1 == x.x1);
  for (int n = 1; n <= 20; ++n)
    CHECK(torus_distance(fiber_iterate(b, orbit, x, n), fiber_iterate_direct(b, orbit, x, n)) <= 1e-12 * std::pow(3.0, n));
  for (int n = 1; n <= 8; ++n)
    CHECK(torus_distance(fiber_iterate(b, orbit, x, n), fiber_iterate_direct(b, orbit, x, n)) <= 1e-12);
  CHECK(b.shift_of(DriverPoint{0.25, {}}) == 0.25);
}

TEST_CASE("fiber entropy") {
  const SymbolicBundle full(Driver::golden_rotation(), wbe::test::full2(), BernoulliMeasure::uniform(2),
                            SymbolicBundle::Twist::constant);
  const std::vector<int> grid = {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  const auto r = fiber_katok_entropy(full, {1, 0}, 16, 0, grid, 0.5, 1);
  CHECK(r.fibers.size() == 16);
  CHECK(r.spread <= 0.01);
  CHECK(std::abs(r.mean - std::numbers::ln2) <= 0.03);
  for (std::size_t i = 1; i < r.fibers.size(); ++i) CHECK(r.fibers[i - 1].omega.angle <= r.fibers[i].omega.angle);

  const SymbolicBundle weighted(Driver::golden_rotation(), wbe::test::column3(), BernoulliMeasure::uniform(3),
                                SymbolicBundle::Twist::relabel);
  const std::vector<int> short_grid = {2, 3, 4, 5, 6, 7, 8};
  const auto w = fiber_katok_entropy(weighted, {1, 1}, 8, 0, short_grid, 0.5, 2);
  CHECK(w.spread <= 1e-12);

  const SymbolicBundle point(Driver::golden_rotation(), SymbolicSystem::with_identity(Sft::full(1)),
                             BernoulliMeasure::uniform(1), SymbolicBundle::Twist::constant);
  CHECK(fiber_katok_entropy(point, {1, 0}, 4, 0, grid, 0.5, 3).mean == Approx(0.0));
}

TEST_CASE("Frostman check") {
  const auto sys = wbe::test::full2();
  const Measure u = BernoulliMeasure::uniform(2);
  const auto low = frostman_check(sys, u, {1, 0}, 0.6, 0, 20, 60, 2000, 1);
  CHECK(low.violations == 0);
  const auto high = frostman_check(sys, u, {1, 0}, 0.75, 0, 30, 60, 2000, 2);
  CHECK(high.points_violating == high.samples);
  for (auto c : high.per_order) CHECK(c == high.samples);
  CHECK(frostman_check(sys, u, {1, 0}, 0.0, 0, 1, 40, 500, 3).violations == 0);
}

}
