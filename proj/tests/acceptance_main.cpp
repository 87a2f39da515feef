// Runs every acceptance criterion (or the ids given on the command line) and
// prints one PASS/FAIL line per criterion. Exit status is nonzero iff any fail.

#include <cstdio>
#include <string>
#include <vector>

#include "wbe/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<wbe::AcceptanceCase> cases;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      auto c = wbe::find_acceptance_case(argv[i]);
      if (!c) {
        std::fprintf(stderr, "unknown acceptance id %s\n", argv[i]);
        return 2;
      }
      cases.push_back(*c);
    }
  } else {
    cases = wbe::acceptance_cases();
  }
  int failed = 0;
  for (const auto& c : cases) {
    const auto r = wbe::run_acceptance(c, wbe::default_data_dir());
    std::printf("%-6s %s  %-45s %7.2fs  %s\n", r.id.c_str(), r.pass ? "PASS" : "FAIL", c.title.c_str(),
                r.seconds, r.detail.c_str());
    failed += r.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(cases.size()) - failed, cases.size());
  return failed == 0 ? 0 : 1;
}
