#pragma once

// Canned configurations for every acceptance criterion, shared by the
// `reproduce` subcommand and the acceptance test binary.

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wbe {

struct AcceptanceResult {
  std::string id;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

struct AcceptanceCase {
  std::string id;
  std::string title;
  double limit_seconds = 0.0;  // 0 means no runtime bound
  /// Returns pass/fail and a one-line detail; runtime is checked by the runner.
  std::function<std::pair<bool, std::string>(const std::string& data_dir)> check;
};

const std::vector<AcceptanceCase>& acceptance_cases();
std::optional<AcceptanceCase> find_acceptance_case(const std::string& id);
AcceptanceResult run_acceptance(const AcceptanceCase& c, const std::string& data_dir);

/// Directory holding the bundled system, measure and carpet files.
std::string default_data_dir();

}  // namespace wbe
