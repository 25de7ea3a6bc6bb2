#include "sawlab/sampler.hpp"

#include <algorithm>
#include <string>

#include "sawlab/enumerate.hpp"
#include "sawlab/errors.hpp"
#include "sawlab/occupancy.hpp"
#include "sawlab/parallel.hpp"

namespace sawlab {

namespace {

// Per-thread packed occupancy reused across rejection attempts.
struct Scratch {
  int d = 0;
  std::int64_t radius = -1;
  PointPacker packer;
  OccupancySet set;
  std::vector<std::uint64_t> inserted;

  bool prepare(int dim, std::size_t total_steps) {
    auto need = static_cast<std::int64_t>(total_steps);
    if (dim != d || need > radius) {
      std::int64_t r = std::max<std::int64_t>(need, 2 * radius);
      if (!PointPacker::fits(dim, r)) {
        r = need;
        if (!PointPacker::fits(dim, r)) return false;
      }
      d = dim;
      radius = r;
      packer = PointPacker(dim, r);
      set = OccupancySet(static_cast<std::size_t>(r) + 2);
      inserted.clear();
    }
    return true;
  }

  // Inserts the vertices of `steps` from `start` onward; returns the end key
  // or nothing when a vertex repeats.
  std::optional<std::uint64_t> lay(std::uint64_t start, std::span<const Step> steps, bool include_start) {
    std::uint64_t key = start;
    if (include_start) {
      if (!set.insert(key)) return std::nullopt;
      inserted.push_back(key);
    }
    for (auto s : steps) {
      key = packer.step(key, s);
      if (!set.insert(key)) return std::nullopt;
      inserted.push_back(key);
    }
    return key;
  }

  void reset() {
    for (auto k : inserted) set.erase(k);
    inserted.clear();
  }
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

void check_codes(int d, std::span<const Step> steps) {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] >= 2 * d) throw BadDirection(i, steps[i], d);
  }
}

}  // namespace

bool joins_cleanly(int d, std::span<const Step> first, std::span<const Step> second) {
  auto& s = scratch();
  if (!s.prepare(d, first.size() + second.size())) {
    std::vector<Step> all(first.begin(), first.end());
    all.insert(all.end(), second.begin(), second.end());
    return !first_repeat(d, all).has_value();
  }
  auto end = s.lay(s.packer.origin(), first, true);
  bool ok = end && s.lay(*end, second, false).has_value();
  s.reset();
  return ok;
}

bool arms_disjoint(int d, std::span<const Step> negative, std::span<const Step> positive) {
  auto& s = scratch();
  if (!s.prepare(d, negative.size() + positive.size())) {
    // Reverse the negative arm and join the two at the origin.
    std::vector<Step> all;
    for (auto it = negative.rbegin(); it != negative.rend(); ++it) all.push_back(static_cast<Step>(reverse_of(*it)));
    all.insert(all.end(), positive.begin(), positive.end());
    return !first_repeat(d, all).has_value();
  }
  bool ok = s.lay(s.packer.origin(), negative, true) && s.lay(s.packer.origin(), positive, false);
  s.reset();
  return ok;
}

int default_base_length(int d) {
  if (d <= 2) return 8;
  if (d <= 4) return 6;
  if (d == 5) return 5;
  return 4;
}

SawSampler::SawSampler(int d, SamplerConfig cfg) : d_(d), cfg_(cfg) {
  if (d < 1) throw InvalidArgument("dimension must be at least 1");
  if (cfg_.base_length < 0) throw InvalidArgument("base_length must be positive");
  if (cfg_.max_rejections == 0) throw InvalidArgument("max_rejections must be positive");
  base_ = cfg_.base_length == 0 ? default_base_length(d) : cfg_.base_length;
  tables_.resize(static_cast<std::size_t>(base_) + 1);
  for (int n = 0; n <= base_; ++n) tables_[n] = list_saws(d, n);
}

std::uint64_t SawSampler::base_count(int n) const {
  if (n < 0 || n > base_) throw InvalidArgument("length outside the base table");
  return n == 0 ? 1 : tables_[n].size() / static_cast<std::size_t>(n);
}

Rng SawSampler::stream(std::uint64_t index) const {
  return Rng(cfg_.seed).derive(cfg_.stream_id).derive(index);
}

void SawSampler::dimerize(int n, Rng& rng, std::vector<Step>& out, SampleStats* stats, bool top) const {
  if (n <= base_) {
    if (n == 0) return;
    std::uint64_t pick = rng.below(base_count(n));
    auto first = tables_[n].begin() + static_cast<std::ptrdiff_t>(pick * n);
    out.insert(out.end(), first, first + n);
    return;
  }
  const int head = (n + 1) / 2;
  const int tail = n / 2;
  const std::size_t start = out.size();
  std::vector<Step> second;
  for (std::uint64_t attempt = 0; attempt < cfg_.max_rejections; ++attempt) {
    out.resize(start);
    second.clear();
    dimerize(head, rng, out, stats, false);
    dimerize(tail, rng, second, stats, false);
    bool ok = joins_cleanly(d_, std::span<const Step>(out).subspan(start), second);
    if (stats != nullptr && top) ++stats->top_attempts;
    if (ok) {
      if (stats != nullptr && top) ++stats->top_accepts;
      out.insert(out.end(), second.begin(), second.end());
      return;
    }
    if (stats != nullptr) ++stats->rejections;
  }
  throw RejectionBudgetExceeded(cfg_.max_rejections);
}

std::vector<Step> SawSampler::uniform_steps(int n, Rng& rng, SampleStats* stats) const {
  if (n < 0) throw InvalidArgument("length must be nonnegative");
  std::vector<Step> out;
  out.reserve(static_cast<std::size_t>(n));
  dimerize(n, rng, out, stats, true);
  return out;
}

Path SawSampler::sample_uniform(int n, Rng& rng, SampleStats* stats) const {
  return Path::trusted(d_, uniform_steps(n, rng, stats));
}

TwoSidedPath SawSampler::sample_two_sided(int m, int n, Rng& rng, SampleStats* stats) const {
  if (m < 0 || n < 0) throw InvalidArgument("lengths must be nonnegative");
  for (std::uint64_t attempt = 0; attempt < cfg_.max_rejections; ++attempt) {
    auto neg = uniform_steps(m, rng);
    auto pos = uniform_steps(n, rng);
    bool ok = arms_disjoint(d_, neg, pos);
    if (stats != nullptr) {
      ++stats->top_attempts;
      if (ok) ++stats->top_accepts; else ++stats->rejections;
    }
    if (ok) return TwoSidedPath(Path::trusted(d_, std::move(neg)), Path::trusted(d_, std::move(pos)));
  }
  throw RejectionBudgetExceeded(cfg_.max_rejections);
}

std::vector<Step> SawSampler::escaping_steps(int n, std::span<const Step> zeta, Rng& rng,
                                             SampleStats* stats) const {
  if (n < 0) throw InvalidArgument("length must be nonnegative");
  check_codes(d_, zeta);
  if (zeta.empty() || n == 0) return uniform_steps(n, rng, stats);

  // A head with every neighbour occupied is the common trapped case.
  if (!has_escaper(d_, 1, zeta)) throw NoEscaperExists("prefix " + steps_to_string(zeta) + " is trapped");

  constexpr std::uint64_t kExistenceCheckAfter = 4096;
  constexpr std::uint64_t kExistenceNodeLimit = 50'000'000;
  for (std::uint64_t attempt = 0; attempt < cfg_.max_rejections; ++attempt) {
    if (attempt == kExistenceCheckAfter) {
      try {
        if (!has_escaper(d_, n, zeta, kExistenceNodeLimit)) {
          throw NoEscaperExists("no " + std::to_string(n) + "-step walk escapes " + steps_to_string(zeta));
        }
      } catch (const BudgetExceeded&) {
        // Inconclusive; keep sampling until the rejection budget runs out.
      }
    }
    auto tail = uniform_steps(n, rng);
    bool ok = joins_cleanly(d_, zeta, tail);
    if (stats != nullptr) {
      ++stats->top_attempts;
      if (ok) ++stats->top_accepts; else ++stats->rejections;
    }
    if (ok) return tail;
  }
  throw RejectionBudgetExceeded(cfg_.max_rejections);
}

Path SawSampler::sample_escaping(int n, const Path& zeta, Rng& rng, SampleStats* stats) const {
  if (zeta.dimension() != d_) throw DimensionMismatch("pattern dimension differs from sampler");
  return Path::trusted(d_, escaping_steps(n, zeta.steps(), rng, stats));
}

Path SawSampler::sample_prefix_conditioned(int n, const Path& zeta, Rng& rng, SampleStats* stats) const {
  if (zeta.dimension() != d_) throw DimensionMismatch("prefix dimension differs from sampler");
  auto k = static_cast<int>(zeta.length());
  if (k > n) throw InvalidArgument("prefix longer than the requested length");
  if (k == n) return shift(zeta, 0);
  std::vector<Step> tail;
  try {
    tail = escaping_steps(n - k, zeta.steps(), rng, stats);
  } catch (const NoEscaperExists& e) {
    throw ImpossiblePrefix(std::string("no ") + std::to_string(n) + "-step walk starts with " + zeta.str());
  }
  std::vector<Step> all(zeta.steps().begin(), zeta.steps().end());
  all.insert(all.end(), tail.begin(), tail.end());
  return Path::trusted(d_, std::move(all));
}

std::vector<Path> SawSampler::sample_many(int n, std::size_t count, unsigned workers, std::uint64_t first,
                                          SampleStats* stats) const {
  std::vector<Path> out(count);
  std::vector<SampleStats> per(count);
  parallel_for(count, workers, [&](std::size_t i) {
    Rng rng = stream(first + i);
    out[i] = sample_uniform(n, rng, &per[i]);
  });
  if (stats != nullptr) {
    for (const auto& s : per) *stats += s;
  }
  return out;
}

}  // namespace sawlab
