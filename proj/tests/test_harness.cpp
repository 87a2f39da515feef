#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"
#include "wbe/acceptance.hpp"
#include "wbe/errors.hpp"
#include "wbe/harness.hpp"
#include "wbe/io.hpp"

using namespace wbe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "wbe_harness_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  const auto cfg = parse_config("# demo\nsubcommand = entropy weighted-cover\na1 = 1\na2=0.5 # inline\n\nn_grid = 4..10:2\n");
  CHECK(cfg.subcommand() == "entropy weighted-cover");
  CHECK(cfg.get_double("a2") == 0.5);
  CHECK(cfg.get_int_list("n_grid") == std::vector<int>{4, 6, 8, 10});
  CHECK(cfg.get_int("k", 3) == 3);
  CHECK(cfg.get_seed() == 0);
  CHECK_THROWS_AS(parse_config("a1 = 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("subcommand = x\nbogus = 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("subcommand = x\na1 = 1\na1 = 2\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("subcommand = x\nnot a pair\n"), InvalidInput);
  const auto bad = parse_config("subcommand = x\nk = 1.5\n");
  CHECK_THROWS_AS(bad.get_int("k"), InvalidInput);
  CHECK_THROWS_AS(bad.get("depth"), InvalidInput);
}

TEST_CASE("integer lists") {
  CHECK(parse_int_list("1,2, 5") == std::vector<int>{1, 2, 5});
  CHECK(parse_int_list("3..5") == std::vector<int>{3, 4, 5});
  CHECK_THROWS_AS(parse_int_list("5..3"), InvalidInput);
  CHECK_THROWS_AS(parse_int_list("1,x"), InvalidInput);
}

TEST_CASE("dispatch") {
  ExperimentConfig cfg("dimension carpet");
  cfg.set("spec", wbe::test::data("mcmullen23.carpet"));
  const auto o = execute(cfg);
  CHECK(o.summary == "1.349684");
  CHECK(o.records.back().at("dimension").get<double>() == doctest::Approx(1.3496838202));

  ExperimentConfig ent("entropy bernoulli");
  ent.set("probs", "0.5,0.5");
  ent.set("log_base", "2");
  CHECK(execute(ent).records.back().at("value").get<double>() == doctest::Approx(1.0));

  ExperimentConfig wc("entropy weighted-cover");
  wc.set("system", wbe::test::data("column3.sft"));
  wc.set("a1", "1");
  wc.set("a2", "1");
  wc.set("depth", "12");
  const auto w = execute(wc);
  CHECK(w.records.back().at("record") == "bracket");
  CHECK(w.records.back().at("metric").get<std::string>().find("2^-k") != std::string::npos);
  CHECK(w.records.front().contains("cost"));
  CHECK_FALSE(w.records.front().contains("elapsed_ms"));
  CHECK(w.trace.front().contains("elapsed_ms"));

  CHECK_THROWS_AS(execute(ExperimentConfig("entropy nothing")), InvalidInput);
  ExperimentConfig grid("variational optimize");
  grid.set("columns", "3,3");
  grid.set("method", "grid");
  CHECK_THROWS_AS(execute(grid), Refusal);
}

TEST_CASE("validators through the harness") {
  ExperimentConfig chain("validate chain-rule");
  chain.set("columns", "1,2");
  chain.set("probs", "0.2,0.3,0.5");
  chain.set("alpha", "0:2");
  chain.set("beta", "1:3:f");
  chain.set("given", "0:1");
  const auto o = execute(chain);
  CHECK(o.pass);

  ExperimentConfig smb("validate smb");
  smb.set("columns", "1,2");
  smb.set("a1", "1");
  smb.set("a2", "1");
  smb.set("n_grid", "100..400:100");
  smb.set("trajectories", "50");
  const auto s = execute(smb);
  REQUIRE(s.csv.has_value());
  CHECK(s.csv->rfind("n,value,ci\n", 0) == 0);
  CHECK(s.records.back().contains("tail_gap"));
  CHECK(s.records.back().contains("target"));
}

TEST_CASE("determinism") {
  ExperimentConfig cfg("rds fiber-entropy");
  cfg.set("columns", "1,2");
  cfg.set("a1", "1");
  cfg.set("a2", "1");
  cfg.set("n_grid", "2..6");
  cfg.set("omega_samples", "6");
  cfg.set("fiber.kind", "relabel");
  cfg.set("seed", "17");
  CHECK(to_json_lines(execute(cfg).records) == to_json_lines(execute(cfg).records));
  ExperimentConfig other = cfg;
  other.set("seed", "18");
  CHECK(to_json_lines(execute(cfg).records) != to_json_lines(execute(other).records));
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("run writes results and a verifiable manifest") {
  const auto out = scratch("wc.jsonl");
  fs::remove(out);
  ExperimentConfig cfg("entropy weighted-cover");
  cfg.set("system", wbe::test::data("column3.sft"));
  cfg.set("a1", "1");
  cfg.set("a2", "1");
  cfg.set("depth", "10");
  cfg.set("output", out.string());
  const auto r = run(cfg);
  REQUIRE(r.manifest.has_value());
  const auto manifest = scratch("wc.manifest.json");
  CHECK(fs::exists(out));
  CHECK(fs::exists(scratch("wc.trace.jsonl")));
  CHECK(verify_manifest(manifest.string()).ok);
  const std::string first = read_text_file(out.string());
  run(cfg);
  CHECK(read_text_file(out.string()) == first);

  {
    std::ofstream tamper(out, std::ios::app);
    tamper << "{}\n";
  }
  const auto check = verify_manifest(manifest.string());
  CHECK_FALSE(check.ok);
  REQUIRE(check.mismatches.size() == 1);
  CHECK(check.mismatches[0].find("digest mismatch") != std::string::npos);
}

TEST_CASE("failed runs write nothing") {
  const auto bad_spec = scratch("bad.carpet");
  write_file_atomic(bad_spec.string(), "carpet two three\n");
  const auto out = scratch("bad.jsonl");
  fs::remove(out);
  ExperimentConfig cfg("dimension carpet");
  cfg.set("spec", bad_spec.string());
  cfg.set("output", out.string());
  try {
    run(cfg);
    FAIL("expected an exception");
  } catch (const std::exception& e) {
    CHECK(exit_code_for(e) == 2);
  }
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(InvalidInput("x")) == 2);
  CHECK(exit_code_for(Refusal("x")) == 3);
  CHECK(exit_code_for(InvariantViolation("x")) == 1);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("acceptance registry") {
  CHECK(acceptance_cases().size() == 10);
  CHECK(find_acceptance_case("AC-3").has_value());
  CHECK_FALSE(find_acceptance_case("AC-nope").has_value());
  ExperimentConfig cfg("reproduce");
  cfg.set("id", "AC-nope");
  CHECK_THROWS_AS(execute(cfg), InvalidInput);
}

}
