#include <map>
#include <unordered_map>

#include "doctest.h"
#include "oracles.hpp"
#include "sawlab/enumerate.hpp"
#include "sawlab/sampler.hpp"
#include "sawlab/stats.hpp"

using namespace sawlab;

namespace {

// Maps every walk in `walks` to a cell index.
struct CellIndex {
  std::map<std::vector<Step>, std::size_t> index;
  explicit CellIndex(const std::vector<oracle::Walk>& walks) {
    for (const auto& w : walks) index.emplace(std::vector<Step>(w.begin(), w.end()), index.size());
  }
  std::size_t operator()(std::span<const Step> s) const {
    auto it = index.find(std::vector<Step>(s.begin(), s.end()));
    REQUIRE(it != index.end());
    return it->second;
  }
};

// A d=2 walk whose head has free neighbours but no `extra`-step extension.
std::vector<Step> pocketed_walk(int k, int extra) {
  auto flat = list_saws(2, k);
  for (std::size_t i = 0; i < flat.size(); i += k) {
    oracle::Walk w(flat.begin() + i, flat.begin() + i + k);
    if (oracle::extensions(2, w, 1) > 0 && oracle::extensions(2, w, extra) == 0) return {w.begin(), w.end()};
  }
  return {};
}

}  // namespace

TEST_CASE("length zero and one") {
  SawSampler s(5);
  Rng rng(1);
  CHECK(s.sample_uniform(0, rng).empty());

  std::vector<std::uint64_t> freq(10, 0);
  for (int i = 0; i < 100000; ++i) ++freq[s.sample_uniform(1, rng).steps()[0]];
  CHECK(chi_square_uniform(freq, 1e-3).passed);
}

TEST_CASE("base tables hold every walk") {
  SawSampler s(2, {.base_length = 5});
  for (int n = 0; n <= 5; ++n) CHECK(s.base_count(n) == oracle::count(2, n));
  CHECK_THROWS_AS(s.base_count(6), InvalidArgument);
}

TEST_CASE("dimerization is uniform on SAW_8 in d=2") {
  SawSampler s(2, {.seed = 17, .base_length = 3});
  auto walks = oracle::all_saws(2, 8);
  CellIndex cell(walks);
  std::vector<std::uint64_t> freq(walks.size(), 0);
  SampleStats stats;
  Rng rng = s.stream(0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) ++freq[cell(s.sample_uniform(8, rng, &stats).steps())];
  auto chi = chi_square_uniform(freq, 1e-3);
  INFO("chi2 = " << chi.statistic << " critical = " << chi.critical);
  CHECK(chi.passed);

  double p = double(oracle::count(2, 8)) / double(oracle::count(2, 4) * oracle::count(2, 4));
  CHECK(stats.top_accepts == draws);
  CHECK(std::abs(binomial_z(stats.top_accepts, stats.top_attempts, p)) < 4.0);
}

TEST_CASE("long samples are self-avoiding") {
  SawSampler s(3);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto p = s.uniform_steps(300, rng);
    CHECK(p.size() == 300);
    CHECK_FALSE(first_repeat(3, p).has_value());
  }
}

TEST_CASE("join and disjointness predicates match the oracle") {
  auto walks = oracle::all_saws(2, 3);
  for (const auto& a : walks) {
    for (const auto& b : walks) {
      std::vector<Step> sa(a.begin(), a.end()), sb(b.begin(), b.end());
      CHECK(joins_cleanly(2, sa, sb) == oracle::concat_ok(2, a, b));
      CHECK(arms_disjoint(2, sa, sb) == oracle::disjoint_arms(2, a, b));
    }
  }
}

TEST_CASE("two-sided sampler") {
  SawSampler s(5);
  {
    Rng a(9), b(9);
    auto two = s.sample_two_sided(0, 7, a);
    CHECK(two.negative_length() == 0);
    CHECK(two.positive() == s.sample_uniform(7, b));
  }

  // m = n = 1: 90 equally likely pairs.
  std::map<std::pair<int, int>, std::uint64_t> freq;
  Rng rng(10);
  for (int i = 0; i < 90000; ++i) {
    auto t = s.sample_two_sided(1, 1, rng);
    ++freq[{t.negative().steps()[0], t.positive().steps()[0]}];
  }
  CHECK(freq.size() == 90);
  std::vector<std::uint64_t> counts;
  for (auto& [k, v] : freq) counts.push_back(v);
  CHECK(chi_square_uniform(counts, 1e-3).passed);

  SampleStats stats;
  for (int i = 0; i < 100000; ++i) s.sample_two_sided(4, 4, rng, &stats);
  Enumerator e;
  double p = to_double(Rational(e.count_saws(5, 8), e.count_saws(5, 4) * e.count_saws(5, 4)));
  CHECK(std::abs(binomial_z(stats.top_accepts, stats.top_attempts, p)) < 3.0);
}

TEST_CASE("escaping sampler") {
  SawSampler s(5);
  {
    Rng a(3), b(3);
    CHECK(s.sample_escaping(6, Path(5), a) == s.sample_uniform(6, b));
  }
  Rng rng(4);
  std::vector<std::uint64_t> freq(10, 0);
  for (int i = 0; i < 90000; ++i) ++freq[s.sample_escaping(1, Path(5, {0}), rng).steps()[0]];
  CHECK(freq[1] == 0);
  freq.erase(freq.begin() + 1);
  CHECK(chi_square_uniform(freq, 1e-3).passed);
}

TEST_CASE("trapped prefixes have no escapers") {
  SawSampler s(2);
  Rng rng(1);
  // Head with all four neighbours occupied.
  std::vector<Step> trapped;
  for (const auto& w : oracle::all_saws(2, 7)) {
    if (oracle::extensions(2, w, 1) == 0) {
      trapped.assign(w.begin(), w.end());
      break;
    }
  }
  REQUIRE(!trapped.empty());
  CHECK_THROWS_AS(s.sample_escaping(3, Path(2, trapped), rng), NoEscaperExists);
  CHECK_THROWS_AS(s.sample_prefix_conditioned(10, Path(2, trapped), rng), ImpossiblePrefix);

  // Head in a closed pocket: short escapers exist, long ones do not.
  auto pocket = pocketed_walk(11, 3);
  REQUIRE(!pocket.empty());
  CHECK(s.sample_escaping(1, Path(2, pocket), rng).length() == 1);
  CHECK_THROWS_AS(s.sample_escaping(20, Path(2, pocket), rng), NoEscaperExists);
}

TEST_CASE("prefix-conditioned sampler") {
  SawSampler s(5);
  Rng rng(8);
  Path full(5, {0, 2, 4, 6, 8});
  CHECK(s.sample_prefix_conditioned(5, full, rng) == full);
  {
    Rng a(2), b(2);
    CHECK(s.sample_prefix_conditioned(6, Path(5), a) == s.sample_uniform(6, b));
  }
  CHECK_THROWS_AS(s.sample_prefix_conditioned(1, full, rng), InvalidArgument);

  oracle::Walk zeta{0, 2};
  std::vector<oracle::Walk> cond;
  for (const auto& w : oracle::all_saws(5, 5)) {
    if (oracle::starts_with(w, zeta)) cond.push_back(w);
  }
  CellIndex cell(cond);
  std::vector<std::uint64_t> freq(cond.size(), 0);
  for (int i = 0; i < 100000; ++i) ++freq[cell(s.sample_prefix_conditioned(5, Path(5, {0, 2}), rng).steps())];
  CHECK(chi_square_uniform(freq, 1e-3).passed);
}

TEST_CASE("draws are reproducible across worker counts") {
  SawSampler s(5, {.seed = 123, .stream_id = 4});
  auto one = s.sample_many(40, 64, 1);
  auto many = s.sample_many(40, 64, 4);
  CHECK(one == many);
  SawSampler other(5, {.seed = 123, .stream_id = 5});
  CHECK(other.sample_many(40, 64, 1) != one);
  SawSampler same(5, {.seed = 123, .stream_id = 4});
  CHECK(same.sample_many(40, 64, 2) == one);
}

TEST_CASE("rejection budget is enforced") {
  SawSampler s(2, {.seed = 1, .base_length = 1, .max_rejections = 1});
  Rng rng(1);
  bool threw = false;
  for (int i = 0; i < 50 && !threw; ++i) {
    try {
      s.sample_uniform(64, rng);
    } catch (const RejectionBudgetExceeded& e) {
      threw = true;
      CHECK(e.attempts() == 1);
    }
  }
  CHECK(threw);
  CHECK_THROWS_AS(SawSampler(2, {.max_rejections = 0}), InvalidArgument);
}
