#include "sawlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sawlab/coupling.hpp"
#include "sawlab/patterns.hpp"
#include "sawlab/sampler.hpp"
#include "sawlab/spectral.hpp"
#include "sawlab/stats.hpp"

namespace sawlab {

namespace {

using Steps = std::vector<Step>;

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::uint64_t power(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Filters all (2d)^m nearest-neighbour walks with an explicit coordinate set.
std::uint64_t naive_count(int d, int m) {
  const std::uint64_t total = power(2 * d, m);
  std::uint64_t good = 0;
  std::vector<std::int64_t> at(d);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::fill(at.begin(), at.end(), 0);
    std::set<std::vector<std::int64_t>> seen{at};
    std::uint64_t r = idx;
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) {
      int c = static_cast<int>(r % (2 * d));
      r /= 2 * d;
      at[axis_of(c)] += sign_of(c);
      ok = seen.insert(at).second;
    }
    good += ok ? 1 : 0;
  }
  return good;
}

std::span<const Step> record(const Steps& flat, std::size_t len, std::size_t i) {
  return std::span<const Step>(flat).subspan(i * len, len);
}

class Suite {
 public:
  Suite(std::ostream* log) : log_(log) {}

  void add(std::string name, bool passed, std::string detail) {
    results_.push_back({std::move(name), passed, std::move(detail)});
    if (log_) {
      const auto& r = results_.back();
      *log_ << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n' << std::flush;
    }
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::ostream* log_;
  std::vector<CheckResult> results_;
};

void small_counts(Suite& s, Enumerator& e, int d) {
  const BigCount q = 2 * d;
  const BigCount expected[] = {1, q, q * (q - 1), q * (q - 1) * (q - 1)};
  bool ok = true;
  std::string detail;
  for (int m = 0; m <= 3; ++m) {
    BigCount c = e.count_saws(d, m);
    ok = ok && c == expected[m];
    detail += (m ? " " : "") + std::string("c_") + std::to_string(m) + "=" + to_decimal(c);
  }
  s.add("small-counts", ok, detail);
}

void oracle_counts(Suite& s, Enumerator& e, const VerifyOptions& o) {
  bool ok = true;
  int checked = -1;
  for (int m = 0; m <= o.n; ++m) {
    if (power(2 * o.d, m) > o.naive_walk_limit) break;
    ok = ok && e.count_saws(o.d, m) == naive_count(o.d, m);
    checked = m;
  }
  s.add("dfs-vs-naive", ok, "lengths 0.." + std::to_string(checked));
}

// Both the finite Markov property and the prefix identity, over every
// prefix of length k <= min(3, m).
void prefix_grid(Suite& s, Enumerator& e, const VerifyOptions& o) {
  bool dmp_ok = true, prefix_ok = true;
  std::uint64_t prefixes = 0;
  for (int m = 1; m <= o.n; ++m) {
    const Steps all = list_saws(o.d, m);
    const std::size_t cm = all.size() / m;
    for (int k = 1; k <= std::min(3, m); ++k) {
      const Steps heads = list_saws(o.d, k);
      std::size_t cursor = 0;
      for (std::size_t h = 0; h * k < heads.size(); ++h) {
        auto zeta = record(heads, k, h);
        ++prefixes;
        // canonical order keeps all walks with this prefix contiguous
        auto below = [&](std::size_t i) {
          return std::lexicographical_compare(all.begin() + i * m, all.begin() + i * m + k, zeta.begin(), zeta.end());
        };
        while (cursor < cm && below(cursor)) ++cursor;
        Steps direct;
        std::size_t group = 0;
        while (cursor < cm && std::equal(zeta.begin(), zeta.end(), all.begin() + cursor * m)) {
          direct.insert(direct.end(), all.begin() + cursor * m + k, all.begin() + (cursor + 1) * m);
          ++cursor;
          ++group;
        }
        BigCount ext = e.count_extensions(o.d, m, Path(o.d, Steps(zeta.begin(), zeta.end())));
        if (m == k) {
          dmp_ok = dmp_ok && group == 1;
          prefix_ok = prefix_ok && ext == 1;
          continue;
        }
        Steps escapers = list_escapers(o.d, m - k, zeta);
        // equal suffix sets under two uniform laws means equal rationals
        dmp_ok = dmp_ok && direct == escapers;
        prefix_ok = prefix_ok && ext == group && ext == escapers.size() / (m - k);
      }
    }
  }
  std::string detail = std::to_string(prefixes) + " (m, prefix) pairs, m <= " + std::to_string(o.n);
  s.add("finite-markov-property", dmp_ok, detail);
  s.add("prefix-identity", prefix_ok, detail);
}

void two_sided_counts(Suite& s, Enumerator& e, const VerifyOptions& o) {
  bool ok = true;
  for (int total = 0; total <= o.n; ++total) {
    for (int a = 0; a <= total; ++a) ok = ok && e.count_two_sided(o.d, a, total - a, TwoSidedPath(o.d)) == e.count_saws(o.d, total);
  }
  s.add("two-sided-split", ok, "c_{a,b} = c_{a+b} for a + b <= " + std::to_string(o.n));
}

void nonintersection(Suite& s, Enumerator& e, const VerifyOptions& o) {
  bool ok = true;
  std::string detail;
  const Rational floor = o.d >= 5 ? Rational(1, 2) : Rational(0);
  for (int m = 1; 2 * m <= o.n; ++m) {
    BigCount cm = e.count_saws(o.d, m);
    Rational r(e.count_saws(o.d, 2 * m), cm * cm);
    ok = ok && r > floor && r <= 1;
    detail += (detail.empty() ? "" : " ") + std::to_string(m) + ":" + fmt(to_double(r));
  }
  if (detail.empty()) detail = "no m with 2m <= n";
  s.add(o.d >= 5 ? "nonintersection-ratio (0.5, 1]" : "nonintersection-ratio (0, 1]", ok, detail);
  auto bad = e.table(o.d).submultiplicativity_violations();
  s.add("submultiplicativity", bad.empty(), std::to_string(bad.size()) + " violations");
}

void fixed_points(Suite& s, Enumerator& e, const VerifyOptions& o) {
  int done = 0;
  for (int m = 1; m <= o.n; ++m) {
    if (e.count_saws(o.d, m) > o.fixed_point_max_paths) break;
    EscapeMatrix mat = build_escape_matrix(o.d, m, true, {.workers = o.workers});
    PerronOptions po;
    po.random_starts = 2;
    po.seed = o.seed;
    po.primitivity_search = false;
    po.workers = o.workers;
    FixedPoint fp = perron_fixed_point(mat, po);
    double sym = symmetry_defect(mat, fp.full_values);
    bool ok = fp.residual <= 1e-10 && fp.start_spread <= 1e-8 && sym <= 1e-8;
    std::string detail = "residual=" + fmt(fp.residual, 3) + " spread=" + fmt(fp.start_spread, 3) +
                         " symmetry=" + fmt(sym, 3) + " Z=" + fmt(fp.measure.Z, 10);
    if (m == 1) {
      double worst = 0;
      for (double v : fp.full_values) worst = std::max(worst, std::abs(v - 1.0 / (2 * o.d)));
      ok = ok && worst <= 1e-10 && std::abs(fp.measure.Z - (2 * o.d - 1)) <= 1e-9;
    }
    s.add("fixed-point n=" + std::to_string(m), ok, detail);
    ++done;
  }
  if (done == 0) s.add("fixed-point", true, "SAW_1 exceeds the matrix size cap");
}

void pattern_means(Suite& s, const VerifyOptions& o) {
  bool ok = true;
  const Rational expected(1, 2 * o.d);
  for (int m = 1; m <= o.n; ++m) ok = ok && exact_mean_density(o.d, m, Path(o.d, {0}), o.workers).mean == expected;
  s.add("single-step-pattern-mean", ok, "E[density of +e1] = 1/" + std::to_string(2 * o.d) + " for n <= " + std::to_string(o.n));
}

// --- statistical checks at fixed parameters ----------------------------------

struct CellIndex {
  std::vector<std::uint64_t> keys;
  explicit CellIndex(const Steps& flat, std::size_t len) {
    for (std::size_t i = 0; i * len < flat.size(); ++i) keys.push_back(encode_steps(record(flat, len, i)));
    std::sort(keys.begin(), keys.end());
  }
  std::size_t at(std::span<const Step> steps) const {
    auto key = encode_steps(steps);
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) throw InvalidArgument("walk missing from the cell index");
    return static_cast<std::size_t>(it - keys.begin());
  }
};

void sampler_exactness(Suite& s, Enumerator& e, const VerifyOptions& o) {
  const int d = 5, n = 6;
  const std::uint64_t draws = 1'000'000;
  SawSampler sampler(d, {.seed = o.seed, .base_length = 3});
  CellIndex cells(list_saws(d, n), n);
  std::vector<std::uint64_t> counts(cells.keys.size(), 0);
  SampleStats stats;
  const std::size_t chunk = 10'000;
  for (std::size_t first = 0; first < draws; first += chunk) {
    for (const auto& p : sampler.sample_many(n, chunk, o.workers, first, &stats)) ++counts[cells.at(p.steps())];
  }
  auto chi = chi_square_uniform(counts, 1e-3);
  s.add("sampler-chi-square", chi.passed,
        "stat=" + fmt(chi.statistic) + " critical=" + fmt(chi.critical) + " p=" + fmt(chi.p_value, 3));
  BigCount c3 = e.count_saws(d, 3);
  double p = to_double(Rational(e.count_saws(d, n), c3 * c3));
  double z = binomial_z(stats.top_accepts, stats.top_attempts, p);
  s.add("sampler-acceptance", std::abs(z) <= 4, "z=" + fmt(z, 3) + " expected=" + fmt(p));
}

void coupling_marginals(Suite& s, const VerifyOptions& o) {
  const int d = 5, N = 6;
  const std::uint64_t trials = 100'000;
  const Path z1(d, {0}), z2(d, {2});
  const auto schedule = CouplingSchedule::geometric(1, 2, 2.0, 0.0, N);
  SawSampler sampler(d, {.seed = o.seed, .stream_id = 7});

  // exact law of the first three steps under each conditioning
  auto projected_law = [&](const Path& z) {
    Steps esc = list_escapers(d, N - 1, z.steps());
    std::map<std::uint64_t, double> law;
    const std::size_t total = esc.size() / (N - 1);
    for (std::size_t i = 0; i < total; ++i) law[encode_steps(record(esc, N - 1, i).first(2))] += 1.0 / total;
    return law;
  };
  auto law1 = projected_law(z1), law2 = projected_law(z2);

  std::vector<CouplingTrace> traces;
  estimate_decoupling_stats(sampler, z1, z2, schedule, trials, o.workers, &traces);
  std::map<std::uint64_t, double> emp1, emp2;
  std::uint64_t first_success = 0;
  for (const auto& t : traces) {
    emp1[encode_steps(t.first.steps().subspan(1, 2))] += 1.0 / trials;
    emp2[encode_steps(t.second.steps().subspan(1, 2))] += 1.0 / trials;
    first_success += t.records.front().success ? 1 : 0;
  }
  auto tv = [](const std::map<std::uint64_t, double>& a, const std::map<std::uint64_t, double>& b) {
    std::set<std::uint64_t> keys;
    for (auto& [k, v] : a) keys.insert(k);
    for (auto& [k, v] : b) keys.insert(k);
    double sum = 0;
    for (auto k : keys) {
      auto ia = a.find(k), ib = b.find(k);
      sum += std::abs((ia == a.end() ? 0 : ia->second) - (ib == b.end() ? 0 : ib->second));
    }
    return sum / 2;
  };
  double tv1 = tv(emp1, law1), tv2 = tv(emp2, law2);
  s.add("coupling-marginal-tv", tv1 <= 0.02 && tv2 <= 0.02, "tv1=" + fmt(tv1, 4) + " tv2=" + fmt(tv2, 4));

  // First block: shared proxy on SAW_5; a walk escaping only one prefix is
  // paired with an independent escaper of the other.
  Steps proxies = list_saws(d, N - 1);
  const std::size_t cp = proxies.size() / (N - 1);
  std::map<Step, double> first1, first2;
  double both = 0;
  std::vector<std::pair<Step, int>> singles;
  for (std::size_t i = 0; i < cp; ++i) {
    auto w = record(proxies, N - 1, i);
    bool e1 = joins_cleanly(d, z1.steps(), w), e2 = joins_cleanly(d, z2.steps(), w);
    if (e1) first1[w[0]] += 1;
    if (e2) first2[w[0]] += 1;
    if (e1 && e2) both += 1;
    else if (e1) singles.push_back({w[0], 1});
    else if (e2) singles.push_back({w[0], 2});
  }
  double n1 = 0, n2 = 0;
  for (auto& [c, v] : first1) n1 += v;
  for (auto& [c, v] : first2) n2 += v;
  double success = both;
  for (auto [c, side] : singles) success += side == 1 ? first2[c] / n2 : first1[c] / n1;
  success /= both + static_cast<double>(singles.size());
  double z = binomial_z(first_success, trials, success);
  s.add("coupling-first-block-success", std::abs(z) <= 3, "z=" + fmt(z, 3) + " exact=" + fmt(success));

  auto st = estimate_decoupling_stats(sampler, z1, z1, schedule, trials, o.workers, nullptr, trials);
  std::uint64_t failures = 0;
  for (const auto& l : st.levels) failures += l.failures;
  s.add("coupling-identical-prefixes", failures == 0, std::to_string(failures) + " failures");
}

void decoupling_decay(Suite& s, const VerifyOptions& o) {
  const int d = 5;
  const std::vector<std::pair<Steps, Steps>> pairs{{{0}, {2}}, {{0, 2}, {0, 4}}, {{0, 0}, {2, 0}}};
  SawSampler sampler(d, {.seed = o.seed, .stream_id = 8});
  for (const auto& [a, b] : pairs) {
    Path z1(d, a), z2(d, b);
    auto schedule = CouplingSchedule::geometric(static_cast<int>(a.size()), 4, 2.0);
    auto st = estimate_decoupling_stats(sampler, z1, z2, schedule, 10'000, o.workers);
    bool ok = true;
    std::string detail;
    for (std::size_t l = 0; l < 4; ++l) {
      detail += (l ? " " : "") + fmt(static_cast<double>(st.levels[l].failures) / st.trials, 4);
      // a rise is tolerated only while the intervals still overlap
      if (l > 0 && st.levels[l].failures > st.levels[l - 1].failures) ok = ok && st.levels[l].ci.lo <= st.levels[l - 1].ci.hi;
    }
    s.add("decoupling-decay " + z1.str() + " vs " + z2.str(), ok, detail);
  }
}

void pattern_lln(Suite& s, Enumerator& e, const VerifyOptions& o) {
  const int d = 5;
  const Path zeta(d, {0, 2});
  Rational ref = two_sided_prefix_prob(e, d, 4, 4, zeta);
  bool ok = true;
  std::string detail;
  Rational prev_gap = -1;
  for (int n = 4; n <= 8; ++n) {
    Rational mean = exact_mean_density(d, n, zeta, o.workers).mean;
    Rational gap = abs(ref - mean);
    if (prev_gap >= 0) ok = ok && gap < prev_gap;
    prev_gap = gap;
    detail += fmt(to_double(mean), 6) + " ";
  }
  s.add("pattern-means-converge", ok, detail + "ref=" + fmt(to_double(ref), 6));

  SawSampler sampler(d, {.seed = o.seed, .stream_id = 9});
  auto short_run = mc_density_stats(sampler, 50, zeta, 10'000, o.workers);
  auto long_run = mc_density_stats(sampler, 200, zeta, 10'000, o.workers, 10'000);
  auto f = f_test_smaller(long_run.variance, long_run.trials, short_run.variance, short_run.trials, 0.01);
  s.add("pattern-variance-shrinks", f.significant,
        "var50=" + fmt(short_run.variance, 4) + " var200=" + fmt(long_run.variance, 4) + " F=" + fmt(f.statistic, 4));
}

void mu_consistency(Suite& s, Enumerator& e, const VerifyOptions& o) {
  SawSampler sampler(5, {.seed = o.seed, .stream_id = 10});
  int ratio_length = default_ratio_length(5);
  for (const auto& [n, c] : e.table(5).plain_counts()) ratio_length = std::max(ratio_length, n);
  auto est = scalar_estimators(sampler, e, 200, 100'000, ratio_length, o.workers);
  double ratio = to_double(est.mu_ratio);
  double rel = std::abs(est.mu_escape - ratio) / ratio;
  s.add("mu-consistency", rel < 0.05,
        "mu_escape=" + fmt(est.mu_escape) + " mu_ratio(c_" + std::to_string(est.ratio_length) + ")=" + fmt(ratio) +
            " rel=" + fmt(rel, 3));
}

}  // namespace

std::vector<CheckResult> run_verify(const VerifyOptions& o, Enumerator& e, std::ostream* log) {
  if (o.d < 1) throw InvalidArgument("dimension must be positive");
  if (o.n < 0) throw InvalidArgument("length must be nonnegative");
  Suite s(log);
  small_counts(s, e, o.d);
  oracle_counts(s, e, o);
  prefix_grid(s, e, o);
  two_sided_counts(s, e, o);
  nonintersection(s, e, o);
  fixed_points(s, e, o);
  pattern_means(s, o);
  if (o.full) {
    sampler_exactness(s, e, o);
    coupling_marginals(s, o);
    decoupling_decay(s, o);
    pattern_lln(s, e, o);
    mu_consistency(s, e, o);
  }
  return s.take();
}

std::string verify_report_json(const VerifyOptions& o, const std::vector<CheckResult>& results) {
  nlohmann::ordered_json j;
  j["d"] = o.d;
  j["n"] = o.n;
  j["full"] = o.full;
  j["seed"] = o.seed;
  bool all = true;
  auto& arr = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    arr.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    all = all && r.passed;
  }
  j["all_passed"] = all;
  return j.dump(2) + "\n";
}

}  // namespace sawlab
