#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sawlab/enumerate.hpp"

namespace sawlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  int d = 2;
  int n = 6;
  bool full = false;        // add the seeded statistical checks (d = 5)
  std::uint64_t seed = 1;
  unsigned workers = 0;
  // Largest (2d)^m the brute-force count comparison will filter.
  std::uint64_t naive_walk_limit = 2'000'000;
  // Largest SAW_m the fixed-point checks will build a matrix for.
  std::size_t fixed_point_max_paths = 4000;
};

// Exact identities over dimension d and lengths up to n. With `full`, also
// the statistical checks at their fixed d = 5 parameters. Each result is
// written to `log` as it completes when log is non-null.
std::vector<CheckResult> run_verify(const VerifyOptions& options, Enumerator& enumerator,
                                    std::ostream* log = nullptr);

std::string verify_report_json(const VerifyOptions& options, const std::vector<CheckResult>& results);

}  // namespace sawlab
