#pragma once

// Experiment orchestration: key=value configs, dispatch to the library,
// atomic result files with SHA-256 manifests.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace wbe {

/// Flat key=value configuration. Keys are the long flag names without "--".
class ExperimentConfig {
 public:
  ExperimentConfig() = default;
  explicit ExperimentConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  const std::string& subcommand() const { return subcommand_; }
  void set_subcommand(std::string s) { subcommand_ = std::move(s); }

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get(const std::string& key) const;  // throws if missing
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_seed(std::uint64_t fallback = 0) const;
  /// "a..b", "a..b:step" or comma-separated integers.
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

 private:
  std::string subcommand_;
  std::map<std::string, std::string> values_;
};

/// Every key accepted in a config file or as a flag.
const std::vector<std::string>& config_keys();

/// Parses "key = value" lines; '#' starts a comment. The subcommand comes
/// from the `subcommand` key (for example "entropy weighted-cover").
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::vector<int> parse_int_list(std::string_view text);

/// Everything a subcommand produces. Records go to JSON-lines, csv to a
/// sibling .csv file, trace (timings) to a sibling .trace.jsonl file.
struct Outcome {
  std::string summary;
  std::vector<nlohmann::json> records;
  std::optional<std::string> csv;
  std::vector<nlohmann::json> trace;
  std::optional<std::string> points_csv;
  bool pass = true;
};

/// Runs the configured subcommand without touching the filesystem for output.
Outcome execute(const ExperimentConfig& cfg);

struct OutputDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  ExperimentConfig config;
  std::string code_version;
  double wall_ms = 0.0;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<OutputDigest> outputs;
};

/// execute() plus persistence when `output` is set: results, csv and trace
/// are written atomically, then <output>.manifest.json.
struct RunResult {
  Outcome outcome;
  std::optional<RunManifest> manifest;
};
RunResult run(const ExperimentConfig& cfg);

std::string code_version();
std::string sha256_hex(std::string_view data);
nlohmann::json manifest_to_json(const RunManifest& m);

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> mismatches;
};
/// Recomputes every output digest listed in a manifest file.
ManifestCheck verify_manifest(const std::string& manifest_path);

/// Serializes records as JSON-lines, one compact object per line.
std::string to_json_lines(const std::vector<nlohmann::json>& records);

/// Exit code for an exception: 2 bad input, 3 refusal, 1 otherwise.
int exit_code_for(const std::exception& e);

/// Exit code when a reproduced criterion fails.
inline constexpr int kExitCriterionFailed = 4;

}  // namespace wbe
