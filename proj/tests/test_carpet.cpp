#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "wbe/carpet.hpp"
#include "wbe/errors.hpp"
#include "wbe/rng.hpp"

using namespace wbe;
using doctest::Approx;

namespace {

CarpetSpec mcmullen() { return CarpetSpec(2, 3, {{0, 0}, {1, 1}, {1, 2}}); }

CarpetSpec full_torus(int m1, int m2) {
  std::vector<Digit> d;
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m2; ++j) d.push_back({i, j});
  return CarpetSpec(m1, m2, d);
}

}  // namespace

TEST_SUITE("carpet") {

TEST_CASE("weights") {
  const auto a = carpet_weights(mcmullen());
  CHECK(a.a1() == Approx(1 / std::log(3.0)).epsilon(1e-15));
  CHECK(a.a2() == Approx(1 / std::log(2.0) - 1 / std::log(3.0)).epsilon(1e-15));
  CHECK(a.a1() == Approx(0.910239).epsilon(1e-6));
  CHECK(a.a2() == Approx(0.532456).epsilon(1e-6));
  const auto square = carpet_weights(full_torus(2, 2));
  CHECK(square.a1() == Approx(1 / std::log(2.0)));
  CHECK(square.a2() == 0.0);
  const auto nine = carpet_weights(CarpetSpec(3, 9, {{0, 0}}));
  CHECK(nine.a1() == Approx(0.455120).epsilon(1e-6));
  CHECK(nine.a2() == Approx(nine.a1()));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(CarpetSpec(1, 3, {{0, 0}}), InvalidInput);
  CHECK_THROWS_AS(CarpetSpec(3, 2, {{0, 0}}), InvalidInput);
  CHECK_THROWS_AS(CarpetSpec(2, 3, {{2, 0}}), InvalidInput);
  CHECK_THROWS_AS(CarpetSpec(2, 3, {}), InvalidInput);
  const CarpetSpec dup(2, 3, {{1, 2}, {0, 0}, {1, 2}});
  CHECK(dup.digits().size() == 2);
  CHECK(dup.index_of({1, 2}) == 1);
  CHECK(dup.index_of({1, 1}) == -1);
  CHECK(mcmullen().column_counts() == std::vector<int>{1, 2});
}

TEST_CASE("dimension formula") {
  // log_2(1 + 2^{log 2 / log 3}) evaluated directly.
  const double oracle = std::log2(1 + std::pow(2.0, std::log(2.0) / std::log(3.0)));
  const double dim = carpet_dimension(mcmullen());
  CHECK(dim == Approx(oracle).epsilon(1e-14));
  CHECK(dim == Approx(1.3496838202).epsilon(1e-10));
  const auto cols = mcmullen().columns();
  CHECK(lagrange_optimum(cols, carpet_weights(mcmullen())).value == Approx(dim).epsilon(1e-12));
  CHECK(carpet_dimension(full_torus(2, 3)) == Approx(2.0));
  CHECK(carpet_dimension(full_torus(3, 3)) == Approx(2.0));
  CHECK(carpet_dimension(CarpetSpec(2, 3, {{1, 1}})) == Approx(0.0));
}

TEST_CASE("torus identity") {
  Rng rng(derive_seed(51, 0));
  for (int t = 0; t < 20; ++t) {
    const int m1 = 2 + static_cast<int>(rng.below(10));
    const int m2 = m1 + static_cast<int>(rng.below(10));
    CHECK(std::abs(torus_weighted_entropy(m1, m2) - 2.0) <= 1e-12);
  }
}

TEST_CASE("encoding") {
  const auto spec = mcmullen();
  const Word zeros(10, 0);
  const auto p = encode_point(spec, zeros);
  CHECK(p.x1 == 0.0);
  CHECK(p.x2 == 0.0);
  // Symbol 1 is digit (1,1): x1 = 1/2 + 1/4 + ... stays inside [0,1).
  const auto q = encode_point(spec, Word(60, 1));
  CHECK(q.x1 < 1.0);
  CHECK(q.x1 >= 0.0);
  const auto r = encode_point(spec, Word{2, 0});
  CHECK(r.x1 == Approx(0.5));
  CHECK(r.x2 == Approx(2.0 / 3));
}

TEST_CASE("decode inverts encode") {
  Rng rng(derive_seed(52, 0));
  const auto spec = mcmullen();
  for (int t = 0; t < 200; ++t) {
    Word w(12);
    for (auto& s : w) s = static_cast<Symbol>(rng.below(3));
    CHECK(decode_word(spec, encode_point(spec, w), 12) == w);
  }
  CHECK_THROWS_AS(decode_word(spec, TorusPoint{0.0, 0.5}, 3), InvalidInput);
}

TEST_CASE("encode_orbit shifts the word") {
  const auto spec = mcmullen();
  const Word w = {0, 1, 2, 2, 1, 0, 1, 2, 0, 0, 1, 2};
  const auto orbit = encode_orbit(spec, w, 3);
  REQUIRE(orbit.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const Word tail(w.begin() + i, w.end());
    CHECK(orbit[static_cast<std::size_t>(i)].x1 == Approx(encode_point(spec, tail).x1));
    CHECK(orbit[static_cast<std::size_t>(i)].x2 == Approx(encode_point(spec, tail).x2));
  }
}

TEST_CASE("skew orbits") {
  const auto spec = mcmullen();
  const TorusPoint p0{0.1, 0.2};
  const auto zero = skew_orbit(spec, SkewFunction::zero(), p0, 3);
  const auto shifted = skew_orbit(spec, SkewFunction::constant(0.05), p0, 3);
  REQUIRE(zero.size() == 4);
  for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero[i].x1 == shifted[i].x1);
  CHECK(zero[1].x1 == Approx(0.2));
  CHECK(zero[1].x2 == Approx(0.6));
  CHECK(shifted[1].x2 == Approx(0.65));

  // phi(x) = x, stepped by hand.
  const auto lin = skew_orbit(spec, SkewFunction::linear(1.0, 0.0), p0, 3);
  double x1 = 0.1, x2 = 0.2;
  for (int i = 1; i <= 3; ++i) {
    const double nx2 = std::fmod(3 * x2 + x1, 1.0);
    x1 = std::fmod(2 * x1, 1.0);
    x2 = nx2;
    CHECK(lin[static_cast<std::size_t>(i)].x1 == Approx(x1).epsilon(1e-12));
    CHECK(lin[static_cast<std::size_t>(i)].x2 == Approx(x2).epsilon(1e-12));
  }
}

TEST_CASE("tabulated skew functions") {
  const auto f = SkewFunction::tabulated({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  CHECK(f(0.25) == Approx(0.5));
  CHECK(f(0.75) == Approx(0.5));
  CHECK_THROWS_AS(SkewFunction::tabulated({0.0, 0.0}, {1.0, 2.0}), InvalidInput);
}

TEST_CASE("box counting") {
  const std::vector<int> scales = {2, 3, 4, 5, 6};
  const auto torus = sample_carpet_points(full_torus(2, 3), 200000, 30, 5);
  CHECK(std::abs(box_counting_dimension(torus, 2, 3, scales).dimension - 2.0) <= 0.05);
  const std::vector<TorusPoint> single(1000, TorusPoint{0.3, 0.7});
  CHECK(box_counting_dimension(single, 2, 3, scales).dimension == Approx(0.0));
  const auto pts = sample_carpet_points(mcmullen(), 200000, 30, 6);
  CHECK(box_counting_dimension(pts, 2, 3, std::vector<int>{2, 3, 4, 5, 6, 7, 8}).dimension >=
        carpet_dimension(mcmullen()) - 0.1);
  CHECK(sample_carpet_points(mcmullen(), 10, 20, 1).size() == 10);
}

TEST_CASE("carpet files") {
  const auto spec = parse_carpet_file("# comment\ncarpet 2 3\n0 0\n1 1\n1 2\n");
  CHECK(spec.digits() == mcmullen().digits());
  CHECK(parse_carpet_file(format_carpet_file(spec)).digits() == spec.digits());
  CHECK_THROWS_AS(parse_carpet_file("garbage\n"), InvalidInput);
  CHECK_THROWS_AS(parse_carpet_file("carpet 2 3\n0\n"), InvalidInput);
  CHECK_THROWS_AS(parse_carpet_file("carpet 2 3\n5 0\n"), InvalidInput);
  CHECK(load_carpet(wbe::test::data("mcmullen23.carpet")).digits() == mcmullen().digits());
  const std::vector<TorusPoint> pts = {{0.5, 0.25}};
  CHECK(format_points_csv(pts).rfind("x1,x2\n", 0) == 0);
}

TEST_CASE("carpet system") {
  const auto sys = carpet_system(mcmullen());
  CHECK(sys.source().is_full());
  CHECK(sys.code().table() == std::vector<Symbol>{0, 1, 1});
}

}
