#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sawlab/enumerate.hpp"
#include "sawlab/lattice.hpp"
#include "sawlab/numeric.hpp"
#include "sawlab/sampler.hpp"
#include "sawlab/stats.hpp"

namespace sawlab {

struct ExactDensity {
  Rational mean;           // E[pi_zeta(n, eta^n)]
  BigCount occurrences;    // summed over SAW_n
  BigCount walks;          // c_n
};

// One DFS over SAW_n accumulating occurrence counts of zeta.
ExactDensity exact_mean_density(int d, int n, const Path& zeta, unsigned workers = 0,
                                std::uint64_t node_limit = 0);

struct DensityStats {
  std::uint64_t trials = 0;
  double mean = 0;
  double variance = 0;
  Interval ci;  // 95% normal interval for the mean
};

// Sample mean and variance of pi_zeta(n, .) over uniform draws; draw i uses
// sampler.stream(first + i).
DensityStats mc_density_stats(const SawSampler& sampler, int n, const Path& zeta, std::uint64_t trials,
                              unsigned workers = 0, std::uint64_t first = 0);

// P(eta^{m,n}[0, k] = zeta) as an exact ratio of two-sided counts.
Rational two_sided_prefix_prob(Enumerator& enumerator, int d, int m, int n, const Path& zeta);

struct PatternWitness {
  bool found = false;
  std::optional<Path> witness;   // a walk with at least 3 occurrences
  int searched_up_to = 0;        // longest witness length tried
  bool node_limit_hit = false;
};

// Searches for a walk containing zeta at least three times, by iterative
// deepening over walks that start with zeta. Budget 0 means 3k + 8.
PatternWitness is_proper_internal_pattern(int d, const Path& zeta, int budget = 0,
                                          std::uint64_t node_limit = 50'000'000);

struct ScalarEstimates {
  int N = 0;
  std::uint64_t trials = 0;
  double mu_escape = 0;      // 2d * P(-e not visited)
  double mu_escape_se = 0;
  double mu_squared_escape = 0;  // c_2 * P(walk avoids an independent 2-step walk)
  double mu_squared_escape_se = 0;
  int ratio_length = 0;
  Rational mu_ratio;         // c_{n*} / c_{n*-1}
  double msd_over_n = 0;     // mean |eta(N)|^2 / N
  double msd_over_n_se = 0;
};

// ratio_length 0 uses the largest plain count already held by the
// enumerator (at least 2), computing default_ratio_length(d) if none is.
ScalarEstimates scalar_estimators(const SawSampler& sampler, Enumerator& enumerator, int N, std::uint64_t trials,
                                  int ratio_length = 0, unsigned workers = 0);

int default_ratio_length(int d);

struct DensityRow {
  int n = 0;
  std::optional<Rational> exact_mean;
  std::optional<DensityStats> mc;
};

struct DensityReport {
  int d = 0;
  Path pattern;
  std::vector<DensityRow> rows;
  std::optional<Rational> reference;  // two-sided prefix probability
  int reference_m = 0;
  int reference_n = 0;
};

std::string density_report_json(const DensityReport& report);
std::string density_report_csv(const DensityReport& report);

}  // namespace sawlab
