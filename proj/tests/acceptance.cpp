// Acceptance suite: one PASS/FAIL line per criterion.
//
//   tuma_acceptance            run every criterion
//   tuma_acceptance 3 4 7      run the listed ones
//
// Exit status is nonzero when any selected criterion fails.

#include <cstdio>
#include <cstdlib>
#include <set>

#include "tuma/testing/checks.hpp"

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& check : tuma::testing::all_checks()) {
    if (!wanted.empty() && wanted.count(check.id) == 0) continue;
    const auto r = check.run();
    std::printf("%s [%d] %s: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
