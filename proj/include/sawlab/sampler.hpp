#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sawlab/lattice.hpp"
#include "sawlab/rng.hpp"

namespace sawlab {

struct SamplerConfig {
  std::uint64_t seed = 0;
  int base_length = 0;                      // 0 = default_base_length(d)
  std::uint64_t max_rejections = 1'000'000; // per draw and recursion level
  std::uint64_t stream_id = 0;
};

// 8 for d <= 2, 6 for d = 3, 4; 5 for d = 5; 4 above.
int default_base_length(int d);

// Counters filled in by the samplers. `top_*` refer to the outermost
// dimerization (or two-sided / escape) rejection loop only.
struct SampleStats {
  std::uint64_t top_attempts = 0;
  std::uint64_t top_accepts = 0;
  std::uint64_t rejections = 0;  // all levels

  SampleStats& operator+=(const SampleStats& o) {
    top_attempts += o.top_attempts;
    top_accepts += o.top_accepts;
    rejections += o.rejections;
    return *this;
  }
};

// Exact uniform SAW sampler: full enumeration tables up to the base length,
// recursive dimerization above it. The tables are built once in the
// constructor; afterwards the sampler is immutable and safe to share between
// threads. All randomness comes from the Rng passed in.
class SawSampler {
 public:
  SawSampler(int d, SamplerConfig cfg = {});

  int dimension() const noexcept { return d_; }
  const SamplerConfig& config() const noexcept { return cfg_; }
  int base_length() const noexcept { return base_; }
  std::uint64_t base_count(int n) const;

  // Stream for draw number `index`: seed -> stream_id -> index.
  Rng stream(std::uint64_t index) const;

  std::vector<Step> uniform_steps(int n, Rng& rng, SampleStats* stats = nullptr) const;
  Path sample_uniform(int n, Rng& rng, SampleStats* stats = nullptr) const;

  // Independent uniform SAW_m and SAW_n conditioned to meet only at 0.
  TwoSidedPath sample_two_sided(int m, int n, Rng& rng, SampleStats* stats = nullptr) const;

  // Uniform over n-step walks escaping zeta.
  std::vector<Step> escaping_steps(int n, std::span<const Step> zeta, Rng& rng,
                                   SampleStats* stats = nullptr) const;
  Path sample_escaping(int n, const Path& zeta, Rng& rng, SampleStats* stats = nullptr) const;

  // Uniform n-step walk conditioned to start with zeta.
  Path sample_prefix_conditioned(int n, const Path& zeta, Rng& rng,
                                 SampleStats* stats = nullptr) const;

  // `count` draws of sample_uniform(n), draw i using stream(first + i).
  // Identical output for any worker count.
  std::vector<Path> sample_many(int n, std::size_t count, unsigned workers = 0,
                                std::uint64_t first = 0, SampleStats* stats = nullptr) const;

 private:
  void dimerize(int n, Rng& rng, std::vector<Step>& out, SampleStats* stats, bool top) const;

  int d_;
  SamplerConfig cfg_;
  int base_;
  std::vector<std::vector<Step>> tables_;  // tables_[n]: flat list of SAW_n
};

// True when the walk `second`, started at the end of `first`, never revisits
// a vertex of `first` or itself.
bool joins_cleanly(int d, std::span<const Step> first, std::span<const Step> second);

// True when the two arms, both started at the origin, share only the origin.
bool arms_disjoint(int d, std::span<const Step> negative, std::span<const Step> positive);

}  // namespace sawlab
