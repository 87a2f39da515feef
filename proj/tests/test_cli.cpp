#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "test_support.hpp"
#include "wbe/io.hpp"

#ifndef WBE_CLI
#define WBE_CLI "wbe"
#endif

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(WBE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "wbe_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help for every subcommand") {
  CHECK(cli("--help") == 0);
  CHECK(cli("entropy weighted-cover --help") == 0);
  CHECK(cli("validate chain-rule --help") == 0);
  CHECK(cli("reproduce --help") == 0);
}

TEST_CASE("successful runs and manifests") {
  const auto out = scratch("carpet.jsonl");
  fs::remove(out);
  CHECK(cli("dimension carpet --spec " + wbe::test::data("mcmullen23.carpet") + " --output " + out.string()) == 0);
  CHECK(fs::exists(out));
  CHECK(cli("verify-manifest " + scratch("carpet.manifest.json").string()) == 0);
  wbe::write_file_atomic(out.string(), "{}\n");
  CHECK(cli("verify-manifest " + scratch("carpet.manifest.json").string()) == 4);
}

TEST_CASE("config files and flag overrides") {
  const auto cfg = scratch("wc.cfg");
  wbe::write_file_atomic(cfg.string(), "subcommand = entropy weighted-cover\nsystem = " +
                                           wbe::test::data("column3.sft") + "\na1 = 1\na2 = 1\ndepth = 10\n");
  CHECK(cli("run --config " + cfg.string()) == 0);
  CHECK(cli("entropy weighted-cover --config " + cfg.string() + " --depth 8") == 0);
  CHECK(cli("entropy weighted-cover --config " + cfg.string() + " --depth 0") == 2);
}

TEST_CASE("exit codes") {
  const auto bad = scratch("bad.carpet");
  wbe::write_file_atomic(bad.string(), "not a carpet\n");
  const auto out = scratch("bad.jsonl");
  fs::remove(out);
  CHECK(cli("dimension carpet --spec " + bad.string() + " --output " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(cli("dimension carpet --spec /nonexistent.carpet") == 2);
  const auto chain = scratch("chain.measure");
  wbe::write_file_atomic(chain.string(), "markov\n0.5 0.3 0.2\n0.1 0.6 0.3\n0.3 0.3 0.4\n");
  CHECK(cli("entropy katok --columns 1,2 --a1 1 --a2 1 --n_grid 20 --measure " + chain.string()) == 3);
  CHECK(cli("variational optimize --columns 2,2,2 --method grid") == 3);
  CHECK(cli("entropy bogus") == 2);
  CHECK(cli("entropy weighted-cover --nonsense 1") == 2);
  CHECK(cli("reproduce AC-nope") == 2);
  CHECK(cli("reproduce AC-3") == 0);
}

}
