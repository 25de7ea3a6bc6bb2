#include "sawlab/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "sawlab/detail/walker.hpp"
#include "sawlab/errors.hpp"
#include "sawlab/parallel.hpp"

namespace sawlab {

using detail::BudgetAbort;
using detail::NodeBudget;
using detail::Walker;

namespace {

// DFS that carries the number of completed occurrences along the path.
class OccurrenceCounter {
 public:
  OccurrenceCounter(Walker& w, std::span<const Step> pattern) : w_(w), pattern_(pattern) {}

  // Does the window ending with one more step `code` match the pattern?
  bool completes(int code) const {
    const auto k = pattern_.size();
    auto s = w_.steps();
    if (s.size() + 1 < k) return false;
    if (pattern_[k - 1] != code) return false;
    const std::size_t start = s.size() + 1 - k;
    for (std::size_t j = 0; j + 1 < k; ++j) {
      if (s[start + j] != pattern_[j]) return false;
    }
    return true;
  }

  // Adds the occurrence totals of every completion to `occ_sum` and returns
  // the number of completions.
  std::uint64_t run(int remaining, std::uint64_t occ, unsigned __int128& occ_sum) {
    if (remaining == 0) {
      occ_sum += occ;
      return 1;
    }
    w_.tick();
    const int codes = 2 * w_.dimension();
    std::uint64_t leaves = 0;
    for (int c = 0; c < codes; ++c) {
      if (!w_.is_free(c)) continue;
      std::uint64_t next = occ + (completes(c) ? 1 : 0);
      if (remaining == 1) {
        occ_sum += next;
        ++leaves;
        continue;
      }
      w_.push(c);
      leaves += run(remaining - 1, next, occ_sum);
      w_.pop();
    }
    return leaves;
  }

 private:
  Walker& w_;
  std::span<const Step> pattern_;
};

BigCount to_big(unsigned __int128 v) {
  BigCount out = static_cast<std::uint64_t>(v >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(v);
  return out;
}

}  // namespace

ExactDensity exact_mean_density(int d, int n, const Path& zeta, unsigned workers, std::uint64_t node_limit) {
  if (zeta.dimension() != d) throw DimensionMismatch("pattern dimension differs from d");
  if (zeta.empty()) throw InvalidArgument("pattern must have at least one step");
  if (n < static_cast<int>(zeta.length())) throw PatternLongerThanPath("pattern longer than the walks");
  const int split = std::min(n, 3);
  auto prefixes = detail::extension_prefixes(d, {}, split, n);
  std::vector<std::uint64_t> leaves(prefixes.size(), 0);
  std::vector<unsigned __int128> sums(prefixes.size(), 0);
  NodeBudget budget(node_limit);
  try {
    parallel_for(prefixes.size(), workers, [&](std::size_t i) {
      Walker w(d, n, static_cast<std::size_t>(n) + 1, node_limit ? &budget : nullptr);
      OccurrenceCounter counter(w, zeta.steps());
      std::uint64_t occ = 0;
      for (auto s : prefixes[i]) {
        occ += counter.completes(s) ? 1 : 0;
        w.push(s);
      }
      leaves[i] = counter.run(n - split, occ, sums[i]);
      w.settle();
    });
  } catch (const BudgetAbort&) {
    throw BudgetExceeded("density enumeration exceeded node limit " + std::to_string(node_limit));
  }
  ExactDensity out;
  out.walks = 0;
  out.occurrences = 0;
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    out.walks += leaves[i];
    out.occurrences += to_big(sums[i]);
  }
  out.mean = Rational(out.occurrences, out.walks * n);
  return out;
}

DensityStats mc_density_stats(const SawSampler& sampler, int n, const Path& zeta, std::uint64_t trials,
                              unsigned workers, std::uint64_t first) {
  if (trials < 2) throw InvalidArgument("need at least two trials");
  if (zeta.dimension() != sampler.dimension()) throw DimensionMismatch("pattern dimension differs from sampler");
  if (zeta.empty()) throw InvalidArgument("pattern must have at least one step");
  if (n < static_cast<int>(zeta.length())) throw PatternLongerThanPath("pattern longer than the walks");
  std::vector<double> values(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng = sampler.stream(first + i);
    auto w = sampler.uniform_steps(n, rng);
    values[i] = static_cast<double>(count_occurrences(w, zeta.steps())) / n;
  });
  RunningStats acc;
  for (double v : values) acc.add(v);
  DensityStats out;
  out.trials = trials;
  out.mean = acc.mean();
  out.variance = acc.variance();
  double half = 1.959963984540054 * acc.standard_error();
  out.ci = {out.mean - half, out.mean + half};
  return out;
}

Rational two_sided_prefix_prob(Enumerator& enumerator, int d, int m, int n, const Path& zeta) {
  if (zeta.dimension() != d) throw DimensionMismatch("pattern dimension differs from d");
  if (static_cast<int>(zeta.length()) > n) throw InvalidArgument("pattern longer than the positive side");
  BigCount hits = enumerator.count_two_sided(d, m, n, TwoSidedPath(Path(d), shift(zeta, 0)));
  BigCount total = enumerator.count_saws(d, m + n);
  return Rational(hits, total);
}

PatternWitness is_proper_internal_pattern(int d, const Path& zeta, int budget, std::uint64_t node_limit) {
  if (zeta.dimension() != d) throw DimensionMismatch("pattern dimension differs from d");
  const int k = static_cast<int>(zeta.length());
  if (k == 0) throw InvalidArgument("pattern must have at least one step");
  if (budget == 0) budget = 3 * k + 8;
  PatternWitness out;
  NodeBudget nodes(node_limit);
  for (int length = k + 2; length <= budget; ++length) {
    Walker w(d, length, static_cast<std::size_t>(length) + 1, node_limit ? &nodes : nullptr);
    w.push_all(zeta.steps());
    OccurrenceCounter counter(w, zeta.steps());
    std::optional<std::vector<Step>> found;
    // Needs two more occurrences; each new one needs at least one more step.
    auto search = [&](auto& self, int remaining, int occ) -> bool {
      if (occ >= 3) {
        found.emplace(w.steps().begin(), w.steps().end());
        return true;
      }
      if (remaining < 3 - occ) return false;
      w.tick();
      for (int c = 0; c < 2 * d; ++c) {
        if (!w.is_free(c)) continue;
        int next = occ + (counter.completes(c) ? 1 : 0);
        w.push(c);
        bool done = self(self, remaining - 1, next);
        w.pop();
        if (done) return true;
      }
      return false;
    };
    try {
      search(search, length - k, 1);
    } catch (const BudgetAbort&) {
      out.node_limit_hit = true;
      return out;
    }
    out.searched_up_to = length;
    if (found) {
      out.found = true;
      out.witness = Path::trusted(d, std::move(*found));
      return out;
    }
  }
  return out;
}

int default_ratio_length(int d) {
  switch (d) {
    case 1: return 20;
    case 2: return 16;
    case 3: return 11;
    case 4: return 9;
    case 5: return 9;
    default: return 6;
  }
}

ScalarEstimates scalar_estimators(const SawSampler& sampler, Enumerator& enumerator, int N, std::uint64_t trials,
                                  int ratio_length, unsigned workers) {
  if (N < 1) throw InvalidArgument("N must be at least 1");
  if (trials < 2) throw InvalidArgument("need at least two trials");
  const int d = sampler.dimension();

  if (ratio_length == 0) {
    auto counts = enumerator.table(d).plain_counts();
    for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
      if (it->first >= 2 && counts.count(it->first - 1)) {
        ratio_length = it->first;
        break;
      }
    }
    if (ratio_length == 0) ratio_length = default_ratio_length(d);
  }
  if (ratio_length < 1) throw InvalidArgument("ratio length must be at least 1");

  // Sites of the independent two-step walks, as packed offsets from 0.
  std::vector<std::pair<LatticePoint, LatticePoint>> two_step;
  for (int a = 0; a < 2 * d; ++a) {
    for (int b = 0; b < 2 * d; ++b) {
      if (b == reverse_of(a)) continue;
      LatticePoint p = LatticePoint::unit(d, a);
      LatticePoint q = p;
      q.move(b);
      two_step.emplace_back(p, q);
    }
  }

  struct Sample {
    double free_neighbours = 0;
    double avoid_two = 0;
    double msd = 0;
  };
  std::vector<Sample> samples(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng = sampler.stream(i);
    auto w = sampler.uniform_steps(N, rng);
    // Only vertices within distance 2 of the origin matter for the counts.
    std::vector<LatticePoint> near;
    LatticePoint at(d);
    for (auto s : w) {
      at.move(s);
      if (at.norm1() <= 2) near.push_back(at);
    }
    auto visited = [&](const LatticePoint& p) { return std::find(near.begin(), near.end(), p) != near.end(); };
    Sample out;
    for (int c = 0; c < 2 * d; ++c) out.free_neighbours += visited(LatticePoint::unit(d, c)) ? 0 : 1;
    std::size_t avoid = 0;
    for (const auto& [p, q] : two_step) avoid += (!visited(p) && !visited(q)) ? 1 : 0;
    out.avoid_two = static_cast<double>(avoid) / static_cast<double>(two_step.size());
    out.msd = static_cast<double>(at.norm2_squared()) / N;
    samples[i] = out;
  });

  RunningStats free_n, avoid2, msd;
  for (const auto& s : samples) {
    free_n.add(s.free_neighbours);
    avoid2.add(s.avoid_two);
    msd.add(s.msd);
  }
  ScalarEstimates out;
  out.N = N;
  out.trials = trials;
  out.mu_escape = free_n.mean();
  out.mu_escape_se = free_n.standard_error();
  const double c2 = 2.0 * d * (2.0 * d - 1);
  out.mu_squared_escape = c2 * avoid2.mean();
  out.mu_squared_escape_se = c2 * avoid2.standard_error();
  out.msd_over_n = msd.mean();
  out.msd_over_n_se = msd.standard_error();
  out.ratio_length = ratio_length;
  out.mu_ratio = Rational(enumerator.count_saws(d, ratio_length), enumerator.count_saws(d, ratio_length - 1));
  return out;
}

std::string density_report_json(const DensityReport& report) {
  nlohmann::ordered_json j;
  j["d"] = report.d;
  j["pattern"] = steps_to_string(report.pattern.steps());
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["n"] = r.n;
    if (r.exact_mean) {
      row["exact_mean"] = to_decimal(numerator(*r.exact_mean)) + "/" + to_decimal(denominator(*r.exact_mean));
      row["exact_mean_value"] = to_double(*r.exact_mean);
    }
    if (r.mc) {
      row["mc_trials"] = r.mc->trials;
      row["mc_mean"] = r.mc->mean;
      row["mc_var"] = r.mc->variance;
      row["ci"] = {r.mc->ci.lo, r.mc->ci.hi};
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  if (report.reference) {
    j["reference"] = {{"m", report.reference_m},
                      {"n", report.reference_n},
                      {"value", to_double(*report.reference)},
                      {"exact", to_decimal(numerator(*report.reference)) + "/" +
                                    to_decimal(denominator(*report.reference))}};
  }
  return j.dump(2) + "\n";
}

std::string density_report_csv(const DensityReport& report) {
  std::ostringstream out;
  out.precision(12);
  out << "n,exact_mean_num,exact_mean_den,mc_mean,mc_var,ci_lo,ci_hi\n";
  for (const auto& r : report.rows) {
    out << r.n << ',';
    if (r.exact_mean) out << to_decimal(numerator(*r.exact_mean)) << ',' << to_decimal(denominator(*r.exact_mean));
    else out << ',';
    out << ',';
    if (r.mc) out << r.mc->mean << ',' << r.mc->variance << ',' << r.mc->ci.lo << ',' << r.mc->ci.hi;
    else out << ",,,";
    out << '\n';
  }
  return out.str();
}

}  // namespace sawlab
