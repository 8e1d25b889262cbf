#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lcval::cli {

struct FixtureCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Recomputes every reference-table fixture under `fixture_dir` and compares
// it with the stored expectations.
std::vector<FixtureCheck> run_fixture_suite(const std::filesystem::path& fixture_dir);

// The product x sampling-set weighted-OA grid as summary CSV.
std::string fixture_summary_csv(const std::filesystem::path& fixture_dir);

// One "PASS name: detail" / "FAIL name: detail" line per check. Returns
// true when all passed.
bool print_fixture_report(const std::vector<FixtureCheck>& checks, std::ostream& out);

}  // namespace lcval::cli
