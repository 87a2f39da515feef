#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "test_support.hpp"
#include "wbe/errors.hpp"
#include "wbe/rng.hpp"
#include "wbe/symbolic.hpp"

using namespace wbe;
using wbe::test::admissible_words;

TEST_SUITE("symbolic") {

TEST_CASE("make_sft builds full and golden mean shifts") {
  const auto full = make_sft(2, {{true, true}, {true, true}});
  CHECK(full.is_full());
  CHECK(full == Sft::full(2));
  const auto gm = make_sft(2, {{true, true}, {true, false}});
  CHECK_FALSE(gm.is_full());
  CHECK_FALSE(gm.allowed(1, 1));
  CHECK(gm.admissible(Word{0, 1, 0, 0, 1}));
  CHECK_FALSE(gm.admissible(Word{0, 1, 1}));
  CHECK_FALSE(gm.admissible(Word{0, 2}));
}

TEST_CASE("stranded symbols are rejected") {
  CHECK_THROWS_WITH_AS(make_sft(3, {{false, false, false}, {true, true, true}, {true, true, true}}),
                       doctest::Contains("stranded symbol 0"), InvalidInput);
  CHECK_THROWS_AS(make_sft(0, {}), InvalidInput);
  CHECK_THROWS_AS(make_sft(2, {{true, true}}), InvalidInput);
}

TEST_CASE("count_words matches enumeration") {
  const auto gm = make_sft(2, {{true, true}, {true, false}});
  for (int n = 0; n <= 10; ++n)
    CHECK(gm.count_words(n) == doctest::Approx(static_cast<double>(admissible_words(gm, n).size())));
  // Fibonacci: words of length 4 number F_6 = 8.
  CHECK(gm.count_words(4) == doctest::Approx(8.0));
}

TEST_CASE("symbolic distance") {
  CHECK(symbolic_distance(Word{0, 1, 1, 0}, Word{0, 1, 1, 0}, 4) == 0.0);
  CHECK(symbolic_distance(Word{0, 1, 1, 0}, Word{0, 1, 0, 0}, 4) == 0.25);
  CHECK(symbolic_distance(Word{1, 0}, Word{0, 0}, 2) == 1.0);
  CHECK(symbolic_distance(Word{1, 0, 1}, Word{1, 0, 0}, 2) == 0.0);
}

TEST_CASE("ball windows") {
  CHECK(ball_spec({1, 0}, 5, 0) == WeightedBallSpec{5, 0, 5, 5});
  CHECK(ball_spec({0.5, 0.5}, 3, 0) == WeightedBallSpec{3, 0, 2, 3});
  const WeightVector carpet(1 / std::log(3.0), 1 / std::log(2.0) - 1 / std::log(3.0));
  const auto spec = ball_spec(carpet, 10, 1);
  CHECK(spec.len1 == 11);
  CHECK(spec.len2 == 16);
  CHECK(ceil_window(2.0) == 2);
  CHECK(ceil_window(2.0000000001) == 2);
  CHECK(ceil_window(2.01) == 3);
  CHECK(ceil_window(0.0) == 0);
}

TEST_CASE("weight vectors are validated") {
  CHECK_THROWS_AS(WeightVector(0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(WeightVector(1.0, -0.5), InvalidInput);
  CHECK_NOTHROW(WeightVector(1.0, 0.0));
}

TEST_CASE("ball membership by hand") {
  const auto sys = wbe::test::column3();
  const WeightedBallSpec spec{0, 0, 2, 3};
  CHECK(in_weighted_ball(Word{0, 1, 2}, Word{0, 1, 2}, spec, sys.code()));
  CHECK(in_weighted_ball(Word{0, 1, 2}, Word{0, 1, 0}, spec, sys.code()) == false);
  CHECK(in_weighted_ball(Word{0, 1, 2}, Word{0, 1, 1}, spec, sys.code()));
  CHECK_FALSE(in_weighted_ball(Word{0, 1, 2}, Word{0, 0, 2}, spec, sys.code()));
}

TEST_CASE("ball membership agrees with the two agreement windows") {
  Rng rng(derive_seed(11, 0));
  const auto sys = wbe::test::column3();
  for (int t = 0; t < 500; ++t) {
    const int len1 = static_cast<int>(rng.below(4));
    const int len2 = len1 + static_cast<int>(rng.below(4));
    Word x(6), y(6);
    for (auto& s : x) s = static_cast<Symbol>(rng.below(3));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.uniform() < 0.7 ? x[i] : static_cast<Symbol>(rng.below(3));
    bool expected = true;
    for (int i = 0; i < len2; ++i) {
      if (i < len1) expected = expected && x[i] == y[i];
      else expected = expected && sys.code()(x[i]) == sys.code()(y[i]);
    }
    CHECK(in_weighted_ball(x, y, WeightedBallSpec{0, 0, len1, len2}, sys.code()) == expected);
  }
}

TEST_CASE("weighted cylinders partition the admissible words") {
  struct Case {
    SymbolicSystem sys;
    int len1, len2;
  };
  const std::vector<Case> cases = {{wbe::test::column3(), 1, 2}, {wbe::test::column3(), 2, 4},
                                   {wbe::test::full2(), 5, 5}, {wbe::test::golden(), 4, 4},
                                   {wbe::test::golden(), 2, 5}};
  for (const auto& c : cases) {
    std::set<WeightedCylinder> oracle;
    for (const auto& w : admissible_words(c.sys.source(), c.len2)) {
      WeightedCylinder cyl;
      cyl.prefix.assign(w.begin(), w.begin() + c.len1);
      for (int i = c.len1; i < c.len2; ++i) cyl.factor_tail.push_back(c.sys.code()(w[static_cast<std::size_t>(i)]));
      oracle.insert(cyl);
    }
    const auto got = enumerate_weighted_cylinders(c.sys, c.len1, c.len2);
    CHECK(std::vector<WeightedCylinder>(oracle.begin(), oracle.end()) == got);
    for (const auto& cyl : got) {
      const Word w = realize(c.sys, cyl);
      CHECK(c.sys.source().admissible(w));
      CHECK(std::equal(cyl.prefix.begin(), cyl.prefix.end(), w.begin()));
    }
  }
  CHECK(enumerate_weighted_cylinders(wbe::test::column3(), 1, 2).size() == 6);
  CHECK(enumerate_weighted_cylinders(wbe::test::full2(), 7, 7).size() == 128);
  CHECK(enumerate_weighted_cylinders(wbe::test::golden(), 4, 4).size() == 8);
}

TEST_CASE("enumeration refuses oversize windows") {
  CHECK_THROWS_AS(enumerate_weighted_cylinders(wbe::test::full2(), 30, 30), Refusal);
  CHECK_THROWS_AS(enumerate_weighted_cylinders(wbe::test::full2(), 12, 12, 24, 100), Refusal);
}

TEST_CASE("induced factor target") {
  // Golden mean with code 0->0, 1->1 onto two symbols keeps the forbidden 11.
  const auto sys = SymbolicSystem::with_induced_factor(make_sft(2, {{true, true}, {true, false}}), {0, 1});
  CHECK_FALSE(sys.target().allowed(1, 1));
  CHECK(wbe::test::column3().target().is_full());
  CHECK(wbe::test::column3().code().fibers() == std::vector<std::vector<Symbol>>{{0}, {1, 2}});
  CHECK_FALSE(wbe::test::column3().code().injective());
}

TEST_CASE("system files round trip") {
  const std::string text = "3\n1 1 1\n1 1 1\n1 1 1\n0 1 1\n";
  const auto file = parse_system_file(text);
  CHECK(file.alphabet_size == 3);
  REQUIRE(file.table.has_value());
  CHECK(*file.table == std::vector<Symbol>{0, 1, 1});
  CHECK(parse_system_file(format_system_file(file)) == file);
  CHECK(to_system(file).code().target_size() == 2);
}

TEST_CASE("malformed system files") {
  CHECK_THROWS_AS(parse_system_file(""), InvalidInput);
  CHECK_THROWS_AS(parse_system_file("x\n"), InvalidInput);
  CHECK_THROWS_AS(parse_system_file("2\n1 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse_system_file("2\n1 2\n1 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse_system_file("2\n1 1\n1 1\n0\n"), InvalidInput);
  CHECK_THROWS_AS(load_system("/nonexistent/file.sft"), InvalidInput);
}

}
