// Runs acceptance criteria 1-9 and prints one PASS/FAIL line per criterion.
// Exits 0 when the set of failing criteria is a subset of --expect-fail.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hk/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "criteria known to fail; see the decisions ledger")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = hk::AcceptanceSuite::all_ids();

  hk::AcceptanceSuite suite;
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  std::vector<int> unexpected;
  int passed = 0;
  for (int id : only) {
    const hk::CriterionResult r = suite.run(id);
    std::printf("criterion %d %s: %s (%.2f s, limit %.0f s)", id, r.title.c_str(), r.pass() ? "PASS" : "FAIL",
                r.seconds, r.runtime_limit);
    if (!r.pass()) std::printf(" -- %s%s", r.failure_summary().c_str(), expected.count(id) ? " [expected]" : "");
    std::printf("\n");
    std::fflush(stdout);
    if (r.pass())
      ++passed;
    else if (!expected.count(id))
      unexpected.push_back(id);
  }
  std::printf("%d/%zu criteria passed", passed, only.size());
  if (!unexpected.empty()) {
    std::printf("; unexpected failures:");
    for (int id : unexpected) std::printf(" %d", id);
  }
  std::printf("\n");
  return unexpected.empty() ? 0 : 1;
}
