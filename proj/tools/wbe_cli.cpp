// Command-line front end: every leaf subcommand maps its long flags onto
// config keys and hands the result to wbe::run.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "wbe/errors.hpp"
#include "wbe/harness.hpp"

namespace {

struct Flag {
  const char* key;
  const char* help;
};

const std::map<std::string, const char*>& flag_help() {
  static const std::map<std::string, const char*> help = {
      {"system", "SFT file: alphabet size, 0/1 matrix rows, optional factor table line"},
      {"columns", "full shift with the given column sizes, e.g. 1,2 (alternative to --system)"},
      {"measure", "measure file (bernoulli p0 p1 ... | markov + matrix rows)"},
      {"probs", "Bernoulli probabilities, comma separated (alternative to --measure)"},
      {"spec", "carpet file: 'carpet m1 m2' then one 'i j' digit per line"},
      {"a1", "weight on the source (default 1)"},
      {"a2", "weight on the factor (default 0)"},
      {"k", "resolution exponent, eps = 2^-k (default 0)"},
      {"N", "smallest allowed ball order"},
      {"depth", "depth cap for cover search (default 12)"},
      {"tol", "tolerance"},
      {"seed", "master seed (default 0)"},
      {"output", "JSON-lines result path; siblings .csv, .trace.jsonl, .manifest.json"},
      {"n_grid", "orders n: a..b, a..b:step or a comma list"},
      {"delta", "Katok mass threshold in (0,1) (default 0.5)"},
      {"deltas", "comma separated Katok thresholds"},
      {"tolerance", "pass tolerance"},
      {"k_max", "largest block length for factor entropy bounds (default 14)"},
      {"method", "closed-form | gradient | grid"},
      {"step", "grid spacing for --method grid"},
      {"s", "exponent"},
      {"n_max", "largest order checked"},
      {"samples", "number of sampled points"},
      {"trajectories", "number of sampled trajectories (default 200)"},
      {"points", "number of sampled points"},
      {"gap_tol", "largest accepted tail gap (default 0.05)"},
      {"mean_tol", "largest accepted tail mean error (default 0.03)"},
      {"alpha", "partition window begin:end[:f]"},
      {"beta", "partition window begin:end[:f]"},
      {"given", "conditioning partition window begin:end[:f], empty for trivial"},
      {"omega_samples", "number of driver samples (default 32)"},
      {"driver.kind", "rotation | markov"},
      {"driver.alpha", "golden | silver | a float (rational, warned)"},
      {"driver.matrix", "Markov driver rows, e.g. '0.5 0.5; 0.2 0.8'"},
      {"driver.window", "Markov driver window length (default 8)"},
      {"fiber.kind", "constant | relabel"},
      {"log_base", "e | 2 | 10 for entropy outputs (default e)"},
      {"scales", "box-count scales k: a..b or comma list (default 2..8)"},
      {"sample_depth", "digits per sampled carpet point (default 40)"},
      {"emit_points", "1 to also write the sampled points as CSV"},
      {"data_dir", "directory holding the bundled data files"},
  };
  return help;
}

const std::vector<std::string> kMeasureInputs = {"system", "columns", "measure", "probs"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Leaf {
  std::string group;
  std::string name;
  std::string description;
  std::vector<std::string> keys;
};

std::vector<Leaf> leaves() {
  const std::vector<std::string> weights = {"a1", "a2"};
  return {
      {"entropy", "bernoulli", "entropy of a Bernoulli measure", {"measure", "probs", "log_base"}},
      {"entropy", "markov", "entropy rate of a Markov measure", {"measure", "probs", "system", "log_base"}},
      {"entropy", "hidden-factor", "bounds on the entropy rate of the factor process",
       join(kMeasureInputs, {"k_max", "tol", "log_base"})},
      {"entropy", "weighted-cover", "bracket for the critical exponent of weighted Bowen ball covers",
       {"system", "columns", "a1", "a2", "k", "N", "depth", "tol"}},
      {"entropy", "katok", "slope of log covering numbers of weighted Bowen balls",
       join(kMeasureInputs, {"a1", "a2", "k", "n_grid", "delta", "log_base"})},
      {"variational", "optimize", "maximize a1 h(mu) + a2 h(pi mu)",
       {"system", "columns", "spec", "a1", "a2", "method", "tol", "step", "log_base"}},
      {"variational", "gap", "compare the variational value with the cover exponent",
       {"system", "columns", "a1", "a2", "k", "N", "depth", "tol", "tolerance"}},
      {"dimension", "carpet", "Hausdorff dimension of a Bedford-McMullen carpet", {"spec"}},
      {"dimension", "box-count", "box-counting estimate from sampled carpet points",
       {"spec", "points", "sample_depth", "scales", "emit_points"}},
      {"rds", "fiber-entropy", "per-fiber Katok estimates for a random skew product",
       join(kMeasureInputs, {"a1", "a2", "k", "n_grid", "delta", "omega_samples", "driver.kind",
                             "driver.alpha", "driver.matrix", "driver.window", "fiber.kind"})},
      {"rds", "frostman", "check mu(B(x,n)) <= exp(-s n) on sampled points",
       join(kMeasureInputs, {"a1", "a2", "s", "k", "N", "n_max", "samples"})},
      {"validate", "smb", "weighted Shannon-McMillan-Breiman series",
       join(kMeasureInputs, {"a1", "a2", "n_grid", "trajectories"})},
      {"validate", "brin-katok", "weighted Brin-Katok series",
       join(kMeasureInputs, {"a1", "a2", "k", "n_grid", "points", "gap_tol", "mean_tol"})},
      {"validate", "katok-delta", "Katok slopes across several delta",
       join(kMeasureInputs, {"a1", "a2", "k", "n_grid", "deltas", "tolerance"})},
      {"validate", "chain-rule", "conditional information chain rule on cylinder partitions",
       join(kMeasureInputs, {"alpha", "beta", "given"})},
  };
}

int report(const wbe::RunResult& r) {
  if (!r.outcome.summary.empty()) std::cout << r.outcome.summary << "\n";
  return r.outcome.pass ? 0 : wbe::kExitCriterionFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted entropy experiments on symbolic systems, carpets and random skew products"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wbe::code_version());

  std::map<std::string, std::string> values;
  std::string config_path;
  wbe::ExperimentConfig chosen;
  bool have_choice = false;

  std::map<std::string, CLI::App*> groups;
  const auto all = leaves();
  for (const auto& leaf : all) {
    auto*& group = groups[leaf.group];
    if (!group) {
      group = app.add_subcommand(leaf.group, leaf.group + " subcommands");
      group->require_subcommand(1);
    }
    CLI::App* sub = group->add_subcommand(leaf.name, leaf.description);
    std::vector<std::string> keys = leaf.keys;
    keys.insert(keys.end(), {"seed", "output"});
    for (const auto& key : keys) sub->add_option("--" + key, values[leaf.group + " " + leaf.name + "|" + key], flag_help().at(key));
    sub->add_option("--config", config_path, "key=value file; flags override its entries");
    const std::string full = leaf.group + " " + leaf.name;
    sub->callback([&, full, keys]() {
      chosen = config_path.empty() ? wbe::ExperimentConfig(full) : wbe::load_config(config_path);
      if (chosen.subcommand() != full) chosen.set_subcommand(full);
      for (const auto& key : keys) {
        const std::string& v = values[full + "|" + key];
        if (!v.empty()) chosen.set(key, v);
      }
      have_choice = true;
    });
  }

  CLI::App* run_cmd = app.add_subcommand("run", "run the subcommand named in a config file");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "key=value file with a subcommand key")->required();
  run_cmd->callback([&]() {
    chosen = wbe::load_config(run_config);
    have_choice = true;
  });

  CLI::App* repro = app.add_subcommand("reproduce", "rerun the canned configuration of an acceptance criterion");
  std::string repro_id, repro_output, repro_data;
  bool repro_all = false;
  repro->add_option("id", repro_id, "criterion id such as AC-1");
  repro->add_flag("--all", repro_all, "run every criterion and print a summary table");
  repro->add_option("--output", repro_output, "JSON-lines result path");
  repro->add_option("--data_dir", repro_data, "directory holding the bundled data files");
  repro->callback([&]() {
    chosen = wbe::ExperimentConfig("reproduce");
    if (repro_all) chosen.set("all", "1");
    else if (repro_id.empty()) throw wbe::InvalidInput("reproduce needs an id or --all");
    else chosen.set("id", repro_id);
    if (!repro_output.empty()) chosen.set("output", repro_output);
    if (!repro_data.empty()) chosen.set("data_dir", repro_data);
    have_choice = true;
  });

  CLI::App* verify = app.add_subcommand("verify-manifest", "recompute the output digests listed in a manifest");
  std::string manifest_path;
  verify->add_option("manifest", manifest_path, "path to a .manifest.json file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wbe::exit_code_for(e);
  }

  try {
    if (verify->parsed()) {
      const auto check = wbe::verify_manifest(manifest_path);
      for (const auto& m : check.mismatches) std::cout << m << "\n";
      std::cout << (check.ok ? "manifest ok" : "manifest MISMATCH") << "\n";
      return check.ok ? 0 : wbe::kExitCriterionFailed;
    }
    if (!have_choice) return 2;
    return report(wbe::run(chosen));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wbe::exit_code_for(e);
  }
}
