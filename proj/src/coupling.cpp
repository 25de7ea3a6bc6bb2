#include "sawlab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "sawlab/enumerate.hpp"
#include "sawlab/errors.hpp"
#include "sawlab/parallel.hpp"

namespace sawlab {

namespace {

using Steps = std::vector<Step>;

Steps concat_steps(std::span<const Step> a, std::span<const Step> b) {
  Steps out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Steps head(std::span<const Step> s, std::size_t len) { return Steps(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(len)); }

// Forward walk from the far end of the negative arm to the origin.
Steps backwards(std::span<const Step> arm) {
  Steps out;
  out.reserve(arm.size());
  for (auto it = arm.rbegin(); it != arm.rend(); ++it) out.push_back(static_cast<Step>(reverse_of(*it)));
  return out;
}

bool two_sided_ok(int d, std::span<const Step> neg, std::span<const Step> pos) {
  return joins_cleanly(d, backwards(neg), pos);
}

}  // namespace

CouplingSchedule CouplingSchedule::geometric(int k, int levels, double base, double scale, int horizon) {
  if (k < 0) throw InvalidArgument("pattern length must be nonnegative");
  if (levels < 1) throw InvalidArgument("schedule needs at least one level");
  if (!(base > 1)) throw InvalidArgument("schedule base must exceed 1");
  if (scale == 0) scale = std::max(k, 1);
  if (scale < 1) throw InvalidArgument("schedule scale must be at least 1");
  std::vector<int> a{k};
  for (int l = 1; l <= levels; ++l) {
    double target = std::ceil(scale * std::pow(base, l));
    if (target > 1e9) throw InvalidArgument("schedule grows beyond representable lengths");
    a.push_back(std::max(a.back() + 1, static_cast<int>(target)));
  }
  if (horizon == 0) horizon = 4 * a.back();
  if (horizon <= k) throw InvalidArgument("horizon must exceed the pattern length");
  while (a.size() > 1 && a.back() >= horizon) a.pop_back();
  a.push_back(horizon);
  return CouplingSchedule{std::move(a)};
}

CouplingSchedule CouplingSchedule::one_block(int k, int horizon) {
  return from_points({k, horizon});
}

CouplingSchedule CouplingSchedule::from_points(std::vector<int> points) {
  if (points.size() < 2) throw InvalidArgument("schedule needs at least two points");
  if (points.front() < 0) throw InvalidArgument("schedule must start at a nonnegative length");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i] <= points[i - 1]) throw InvalidArgument("schedule must be strictly increasing");
  }
  return CouplingSchedule{std::move(points)};
}

std::optional<std::string> coupling_dimension_warning(int d) {
  if (d >= 5) return std::nullopt;
  return "coupling in d = " + std::to_string(d) +
         " is outside the high-dimensional regime; escape probabilities may be small";
}

CouplingTrace run_one_sided_coupling(const SawSampler& sampler, const Path& zeta1, const Path& zeta2,
                                     const CouplingSchedule& schedule, Rng& rng) {
  const int d = sampler.dimension();
  if (zeta1.dimension() != d || zeta2.dimension() != d) throw DimensionMismatch("prefix dimension differs from sampler");
  if (zeta1.length() != zeta2.length()) throw InvalidArgument("prefixes must have equal length");
  const int k = static_cast<int>(zeta1.length());
  if (schedule.k() != k) throw InvalidArgument("schedule must start at the prefix length");
  const int horizon = schedule.horizon();
  for (const Path* z : {&zeta1, &zeta2}) {
    if (!has_escaper(d, horizon - k, z->steps(), 100'000'000)) {
      throw ImpossiblePrefix("no " + std::to_string(horizon) + "-step walk starts with " + z->str());
    }
  }

  CouplingTrace trace;
  trace.schedule = schedule.a;
  trace.horizon = horizon;
  Steps w1(zeta1.steps().begin(), zeta1.steps().end());
  Steps w2(zeta2.steps().begin(), zeta2.steps().end());
  const std::uint64_t cap = sampler.config().max_rejections;

  for (std::size_t l = 1; l < schedule.a.size(); ++l) {
    const int start = schedule.a[l - 1];
    const int proxy_length = horizon - start;
    const auto block = static_cast<std::size_t>(schedule.a[l] - start);
    IterationRecord rec;
    rec.ell = static_cast<int>(l);
    rec.a = schedule.a[l];
    Steps proxy;
    bool e1 = false, e2 = false;
    for (;;) {
      proxy = sampler.uniform_steps(proxy_length, rng);
      e1 = joins_cleanly(d, w1, proxy);
      e2 = (w1 == w2) ? e1 : joins_cleanly(d, w2, proxy);
      if (e1 || e2) break;
      if (++rec.resamples >= cap) throw RejectionBudgetExceeded(rec.resamples);
    }
    Steps b1, b2;
    if (e1 && e2) {
      b1 = b2 = head(proxy, block);
    } else if (e1) {
      b1 = head(proxy, block);
      b2 = head(sampler.escaping_steps(proxy_length, w2, rng), block);
    } else {
      b2 = head(proxy, block);
      b1 = head(sampler.escaping_steps(proxy_length, w1, rng), block);
    }
    rec.success = b1 == b2;
    w1.insert(w1.end(), b1.begin(), b1.end());
    w2.insert(w2.end(), b2.begin(), b2.end());
    trace.records.push_back(rec);
  }

  int equal_from = horizon;
  while (equal_from > 0 && w1[equal_from - 1] == w2[equal_from - 1]) --equal_from;
  trace.final_equal_from = equal_from;
  trace.first = Path::trusted(d, std::move(w1));
  trace.second = Path::trusted(d, std::move(w2));
  return trace;
}

TwoSidedCouplingTrace run_two_sided_coupling(const SawSampler& sampler, int m, int n, const TwoSidedPath& zeta1,
                                             const TwoSidedPath& zeta2, const CouplingSchedule& schedule, Rng& rng) {
  const int d = sampler.dimension();
  if (zeta1.dimension() != d || zeta2.dimension() != d) throw DimensionMismatch("middle dimension differs from sampler");
  const int k = schedule.k();
  for (const TwoSidedPath* z : {&zeta1, &zeta2}) {
    if (static_cast<int>(z->negative_length()) != k || static_cast<int>(z->positive_length()) != k) {
      throw InvalidArgument("middles must cover exactly [-k, k]");
    }
  }
  if (k > std::min(m, n)) throw InvalidArgument("k must not exceed min(m, n)");
  if (schedule.horizon() != std::max(m, n)) throw InvalidArgument("schedule must end at max(m, n)");

  Steps neg1(zeta1.negative().steps().begin(), zeta1.negative().steps().end());
  Steps pos1(zeta1.positive().steps().begin(), zeta1.positive().steps().end());
  Steps neg2(zeta2.negative().steps().begin(), zeta2.negative().steps().end());
  Steps pos2(zeta2.positive().steps().begin(), zeta2.positive().steps().end());

  // A middle whose growing arm has no free first step cannot be extended.
  for (auto [neg, pos] : {std::pair{&neg1, &pos1}, std::pair{&neg2, &pos2}}) {
    bool neg_ok = m == k, pos_ok = n == k;
    for (Step c = 0; c < 2 * d && !(neg_ok && pos_ok); ++c) {
      Steps one{c};
      neg_ok = neg_ok || two_sided_ok(d, concat_steps(*neg, one), *pos);
      pos_ok = pos_ok || two_sided_ok(d, *neg, concat_steps(*pos, one));
    }
    if (!neg_ok || !pos_ok) throw ImpossiblePrefix("two-sided middle cannot be extended");
  }

  TwoSidedCouplingTrace trace;
  trace.schedule = schedule.a;
  trace.negative_horizon = m;
  trace.positive_horizon = n;
  const std::uint64_t cap = sampler.config().max_rejections;

  for (std::size_t l = 1; l < schedule.a.size(); ++l) {
    const int start = schedule.a[l - 1];
    const int end = schedule.a[l];
    const int neg_len = std::max(m - start, 0);
    const int pos_len = std::max(n - start, 0);
    const auto neg_block = static_cast<std::size_t>(std::min(end, m) - std::min(start, m));
    const auto pos_block = static_cast<std::size_t>(std::min(end, n) - std::min(start, n));
    IterationRecord rec;
    rec.ell = static_cast<int>(l);
    rec.a = end;

    auto draw = [&] { return std::pair{sampler.uniform_steps(neg_len, rng), sampler.uniform_steps(pos_len, rng)}; };
    auto fits = [&](const Steps& neg, const Steps& pos, const std::pair<Steps, Steps>& ext) {
      return two_sided_ok(d, concat_steps(neg, ext.first), concat_steps(pos, ext.second));
    };
    auto conditioned = [&](const Steps& neg, const Steps& pos) {
      for (std::uint64_t tries = 0; tries < cap; ++tries) {
        auto ext = draw();
        if (fits(neg, pos, ext)) return ext;
      }
      throw RejectionBudgetExceeded(cap);
    };

    std::pair<Steps, Steps> shared;
    bool e1 = false, e2 = false;
    const bool same = neg1 == neg2 && pos1 == pos2;
    for (;;) {
      shared = draw();
      e1 = fits(neg1, pos1, shared);
      e2 = same ? e1 : fits(neg2, pos2, shared);
      if (e1 || e2) break;
      if (++rec.resamples >= cap) throw RejectionBudgetExceeded(rec.resamples);
    }
    std::pair<Steps, Steps> x1 = shared, x2 = shared;
    if (!e2) x2 = conditioned(neg2, pos2);
    if (!e1) x1 = conditioned(neg1, pos1);
    Steps bn1 = head(x1.first, neg_block), bp1 = head(x1.second, pos_block);
    Steps bn2 = head(x2.first, neg_block), bp2 = head(x2.second, pos_block);
    rec.success = bn1 == bn2 && bp1 == bp2;
    neg1.insert(neg1.end(), bn1.begin(), bn1.end());
    pos1.insert(pos1.end(), bp1.begin(), bp1.end());
    neg2.insert(neg2.end(), bn2.begin(), bn2.end());
    pos2.insert(pos2.end(), bp2.begin(), bp2.end());
    trace.records.push_back(rec);
  }
  trace.first = TwoSidedPath(Path::trusted(d, std::move(neg1)), Path::trusted(d, std::move(pos1)));
  trace.second = TwoSidedPath(Path::trusted(d, std::move(neg2)), Path::trusted(d, std::move(pos2)));
  return trace;
}

DecouplingStats estimate_decoupling_stats(const SawSampler& sampler, const Path& zeta1, const Path& zeta2,
                                          const CouplingSchedule& schedule, std::uint64_t trials, unsigned workers,
                                          std::vector<CouplingTrace>* traces, std::uint64_t first_trial) {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  std::vector<CouplingTrace> runs(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng = sampler.stream(first_trial + i);
    runs[i] = run_one_sided_coupling(sampler, zeta1, zeta2, schedule, rng);
  });

  DecouplingStats stats;
  stats.trials = trials;
  const std::size_t levels = schedule.iterations();
  stats.levels.resize(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    stats.levels[l].ell = static_cast<int>(l + 1);
    stats.levels[l].a = schedule.a[l + 1];
  }
  stats.tail.resize(schedule.a.size());
  for (std::size_t j = 0; j < schedule.a.size(); ++j) stats.tail[j].m = schedule.a[j];
  for (const auto& run : runs) {
    for (std::size_t l = 0; l < levels; ++l) {
      stats.levels[l].failures += run.records[l].success ? 0 : 1;
      stats.levels[l].resamples += run.records[l].resamples;
    }
    for (auto& t : stats.tail) t.disagreements += run.final_equal_from > t.m ? 1 : 0;
  }
  for (auto& l : stats.levels) l.ci = wilson_interval(l.failures, trials);
  for (auto& t : stats.tail) t.ci = wilson_interval(t.disagreements, trials);
  if (traces != nullptr) *traces = std::move(runs);
  return stats;
}

std::string trace_json_line(std::uint64_t trial, const CouplingTrace& trace) {
  nlohmann::ordered_json j;
  j["trial"] = trial;
  j["schedule"] = trace.schedule;
  auto per = nlohmann::ordered_json::array();
  for (const auto& r : trace.records) {
    per.push_back({{"l", r.ell}, {"a_l", r.a}, {"success", r.success}, {"resamples", r.resamples}});
  }
  j["per_iter"] = per;
  j["final_equal_from"] = trace.final_equal_from;
  return j.dump();
}

std::string decoupling_csv(const DecouplingStats& stats) {
  std::ostringstream out;
  out.precision(10);
  out << "l,a_l,trials,failures,frequency,ci_lo,ci_hi,resamples\n";
  for (const auto& l : stats.levels) {
    out << l.ell << ',' << l.a << ',' << stats.trials << ',' << l.failures << ','
        << static_cast<double>(l.failures) / static_cast<double>(stats.trials) << ',' << l.ci.lo << ',' << l.ci.hi
        << ',' << l.resamples << '\n';
  }
  return out.str();
}

}  // namespace sawlab
