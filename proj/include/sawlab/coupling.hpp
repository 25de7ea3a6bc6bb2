#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sawlab/lattice.hpp"
#include "sawlab/sampler.hpp"
#include "sawlab/stats.hpp"

namespace sawlab {

// Block boundaries a_0 = k < a_1 < ... < a_L = horizon.
struct CouplingSchedule {
  std::vector<int> a;

  int k() const { return a.front(); }
  int horizon() const { return a.back(); }
  std::size_t iterations() const { return a.size() - 1; }

  // a_l = max(a_{l-1} + 1, ceil(scale * base^l)) for l = 1..levels, then
  // clamped at the horizon (default 4 * a_levels), which closes the schedule.
  // scale 0 means scale = k.
  static CouplingSchedule geometric(int k, int levels, double base = 2.0, double scale = 0.0, int horizon = 0);
  // A single block from k straight to the horizon.
  static CouplingSchedule one_block(int k, int horizon);
  // Validates an explicit list of boundaries.
  static CouplingSchedule from_points(std::vector<int> points);
};

struct IterationRecord {
  int ell = 0;
  int a = 0;  // right end of the block
  bool success = false;
  std::uint64_t resamples = 0;
};

struct CouplingTrace {
  std::vector<int> schedule;
  int horizon = 0;
  std::vector<IterationRecord> records;
  Path first;
  Path second;
  // Smallest m with T^m first == T^m second.
  int final_equal_from = 0;
};

struct TwoSidedCouplingTrace {
  std::vector<int> schedule;
  int negative_horizon = 0;
  int positive_horizon = 0;
  std::vector<IterationRecord> records;
  TwoSidedPath first;
  TwoSidedPath second;
};

// Couples the uniform N-step walks conditioned to start with zeta1 and
// zeta2 (equal lengths k = schedule.k(), N = schedule.horizon()).
CouplingTrace run_one_sided_coupling(const SawSampler& sampler, const Path& zeta1, const Path& zeta2,
                                     const CouplingSchedule& schedule, Rng& rng);

// Couples two-sided walks on [-m, n] conditioned on their middles on [-k, k].
// The schedule must end at max(m, n).
TwoSidedCouplingTrace run_two_sided_coupling(const SawSampler& sampler, int m, int n, const TwoSidedPath& zeta1,
                                             const TwoSidedPath& zeta2, const CouplingSchedule& schedule, Rng& rng);

struct LevelStats {
  int ell = 0;
  int a = 0;
  std::uint64_t failures = 0;
  std::uint64_t resamples = 0;
  Interval ci;
};

struct TailStats {
  int m = 0;
  std::uint64_t disagreements = 0;
  Interval ci;
};

struct DecouplingStats {
  std::uint64_t trials = 0;
  std::vector<LevelStats> levels;
  std::vector<TailStats> tail;  // at each schedule point
};

// Runs `trials` independent one-sided couplings (trial i uses
// sampler.stream(first_trial + i)) and tabulates failure and tail
// disagreement frequencies with Wilson intervals.
DecouplingStats estimate_decoupling_stats(const SawSampler& sampler, const Path& zeta1, const Path& zeta2,
                                          const CouplingSchedule& schedule, std::uint64_t trials,
                                          unsigned workers = 0, std::vector<CouplingTrace>* traces = nullptr,
                                          std::uint64_t first_trial = 0);

// Warning text for dimensions below the range the construction is meant for.
std::optional<std::string> coupling_dimension_warning(int d);

std::string trace_json_line(std::uint64_t trial, const CouplingTrace& trace);
std::string decoupling_csv(const DecouplingStats& stats);

}  // namespace sawlab
