#include "doctest.h"
#include "oracles.hpp"
#include "sawlab/patterns.hpp"

using namespace sawlab;

namespace {

Rational oracle_mean(int d, int n, const oracle::Walk& z) {
  std::uint64_t occ = 0, walks = 0;
  for (const auto& w : oracle::all_saws(d, n)) {
    occ += oracle::occurrences(w, z);
    ++walks;
  }
  return Rational(BigCount(occ), BigCount(walks) * n);
}

std::vector<Step> trapped_walk() {
  for (const auto& w : oracle::all_saws(2, 7)) {
    if (oracle::extensions(2, w, 1) == 0) return {w.begin(), w.end()};
  }
  return {};
}

}  // namespace

TEST_CASE("single-step pattern has mean 1/(2d)") {
  for (int n = 1; n <= 9; ++n) CHECK(exact_mean_density(2, n, Path(2, {0})).mean == Rational(1, 4));
  for (int n = 1; n <= 6; ++n) CHECK(exact_mean_density(5, n, Path(5, {3})).mean == Rational(1, 10));
}

TEST_CASE("exact means match the oracle") {
  CHECK(exact_mean_density(2, 6, Path(2, {0, 2})).mean == oracle_mean(2, 6, {0, 2}));
  CHECK(exact_mean_density(3, 5, Path(3, {0, 2, 4})).mean == oracle_mean(3, 5, {0, 2, 4}));
  auto e = exact_mean_density(2, 8, Path(2, {0, 0}));
  CHECK(e.walks == oracle::count(2, 8));
  CHECK(e.mean == oracle_mean(2, 8, {0, 0}));
}

TEST_CASE("occurrence accumulation equals averaging the density over SAW_n") {
  for (int n = 2; n <= 7; ++n) {
    for (const auto& z : {std::vector<Step>{0, 2}, std::vector<Step>{0, 0}, std::vector<Step>{2}}) {
      Path zeta(2, z);
      Rational total = 0;
      std::uint64_t count = 0;
      for_each_saw(2, n, [&](std::span<const Step> s) {
        total += pattern_density(Path::trusted(2, {s.begin(), s.end()}), zeta);
        ++count;
      });
      CHECK(exact_mean_density(2, n, zeta).mean == total / count);
    }
  }
}

TEST_CASE("exact means are symmetric") {
  Path zeta(2, {0, 2, 2});
  Rational base = exact_mean_density(2, 7, zeta).mean;
  for (const auto& g : all_signed_permutations(2)) CHECK(exact_mean_density(2, 7, g.apply(zeta)).mean == base);
}

TEST_CASE("trapped patterns only occur at the end") {
  auto t = trapped_walk();
  REQUIRE(!t.empty());
  Path zeta(2, t);
  for (int n = 7; n <= 9; ++n) {
    Rational m = exact_mean_density(2, n, zeta).mean;
    CHECK(m == oracle_mean(2, n, {t.begin(), t.end()}));
    CHECK(m <= Rational(1, n));
  }
  CHECK_THROWS_AS(exact_mean_density(2, 3, Path(2, {0, 0, 0, 0})), PatternLongerThanPath);
  CHECK_THROWS_AS(exact_mean_density(2, 12, Path(2, {0}), 1, 1000), BudgetExceeded);
}

TEST_CASE("Monte Carlo densities") {
  SawSampler s(5, {.seed = 31});
  auto single = mc_density_stats(s, 30, Path(5, {0}), 20000, 1);
  CHECK(std::abs(single.mean - 0.1) < 3 * std::sqrt(single.variance / 20000));
  CHECK(single.variance >= 0);

  Path zeta(5, {0, 2});
  double exact = to_double(exact_mean_density(5, 6, zeta).mean);
  auto mc = mc_density_stats(s, 6, zeta, 50000, 1);
  CHECK(std::abs(mc.mean - exact) < 4 * std::sqrt(mc.variance / 50000));
  CHECK(mc.ci.lo < mc.mean);
  CHECK(mc.mean < mc.ci.hi);

  auto a = mc_density_stats(s, 50, zeta, 3000, 1);
  auto b = mc_density_stats(s, 50, zeta, 3000, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK_THROWS_AS(mc_density_stats(s, 50, zeta, 1), InvalidArgument);
}

TEST_CASE("two-sided prefix probabilities") {
  Enumerator e;
  for (int m = 0; m <= 3; ++m) {
    for (int n = 1; n <= 3; ++n) {
      CHECK(two_sided_prefix_prob(e, 5, m, n, Path(5, {0})) == Rational(1, 10));
      CHECK(two_sided_prefix_prob(e, 2, m, n, Path(2, {2})) == Rational(1, 4));
    }
  }
  Path zeta(2, {0, 2});
  CHECK(two_sided_prefix_prob(e, 2, 0, 5, zeta) == Rational(e.count_extensions(2, 5, zeta), e.count_saws(2, 5)));
  CHECK(two_sided_prefix_prob(e, 2, 3, 3, zeta) ==
        Rational(BigCount(oracle::count_two_sided(2, 3, 3, {}, {0, 2})), BigCount(oracle::count(2, 6))));
  CHECK(two_sided_prefix_prob(e, 5, 2, 2, Path(5, {0, 2})) ==
        Rational(BigCount(oracle::count_two_sided(5, 2, 2, {}, {0, 2})), BigCount(oracle::count(5, 4))));
  CHECK_THROWS_AS(two_sided_prefix_prob(e, 2, 3, 1, zeta), InvalidArgument);
}

TEST_CASE("proper internal pattern search") {
  auto one = is_proper_internal_pattern(5, Path(5, {0}));
  REQUIRE(one.found);
  CHECK(*one.witness == Path(5, {0, 0, 0}));

  auto line = is_proper_internal_pattern(2, Path(2, {2, 2, 2, 2}));
  REQUIRE(line.found);
  CHECK(line.witness->length() == 6);

  auto stair = is_proper_internal_pattern(2, Path(2, {0, 2}));
  REQUIRE(stair.found);
  CHECK(stair.witness->length() == 6);
  CHECK(count_occurrences(stair.witness->steps(), std::vector<Step>{0, 2}) >= 3);

  auto t = trapped_walk();
  auto trapped = is_proper_internal_pattern(2, Path(2, t), 12);
  CHECK_FALSE(trapped.found);
  CHECK_FALSE(trapped.node_limit_hit);
  CHECK(trapped.searched_up_to == 12);
}

TEST_CASE("scalar estimators") {
  Enumerator e;
  SawSampler line(1);
  auto d1 = scalar_estimators(line, e, 25, 100, 5, 1);
  CHECK(d1.msd_over_n == 25.0);
  CHECK(d1.mu_escape == 1.0);
  CHECK(d1.mu_ratio == 1);

  SawSampler s(5, {.seed = 77});
  auto est = scalar_estimators(s, e, 60, 5000, 7, 1);
  double ratio = to_double(est.mu_ratio);
  CHECK(est.ratio_length == 7);
  CHECK(std::abs(est.mu_escape - ratio) / ratio < 0.05);
  CHECK(std::abs(est.mu_squared_escape - ratio * ratio) / (ratio * ratio) < 0.05);
  CHECK(est.msd_over_n > 1.0);

  // largest cached length is picked up by default
  e.count_saws(5, 8);
  CHECK(scalar_estimators(s, e, 10, 10, 0, 1).ratio_length == 8);
}

TEST_CASE("density report formats") {
  DensityReport r;
  r.d = 2;
  r.pattern = Path(2, {0});
  r.rows.push_back({4, Rational(1, 4), std::nullopt});
  r.rows.push_back({8, std::nullopt, DensityStats{10, 0.25, 0.01, {0.2, 0.3}}});
  r.reference = Rational(1, 4);
  r.reference_m = r.reference_n = 3;
  auto csv = density_report_csv(r);
  CHECK(csv.find("4,1,4,,,,\n") != std::string::npos);
  CHECK(csv.find("8,,,0.25,0.01,0.2,0.3\n") != std::string::npos);
  auto json = density_report_json(r);
  CHECK(json.find("\"exact_mean\": \"1/4\"") != std::string::npos);
  CHECK(json.find("\"reference\"") != std::string::npos);
}
