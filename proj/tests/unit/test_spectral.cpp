#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sawlab/spectral.hpp"

using namespace sawlab;

namespace {

std::vector<double> as_double(const std::vector<long double>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("escape matrix for single steps") {
  auto m = build_escape_matrix(5, 1, true);
  CHECK(m.size() == 10);
  CHECK(m.full_size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(m.rows.row(i).size() == 9);
    CHECK(m.rows.contains(i, i));
    CHECK_FALSE(m.rows.contains(i, i ^ 1));
  }
}

TEST_CASE("escape matrix entries match pairwise concatenation") {
  auto walks = oracle::all_saws(2, 3);
  auto dense = oracle::dense_escape_matrix(2, walks);
  auto m = build_escape_matrix(2, 3, false);
  REQUIRE(m.full_size() == walks.size());
  for (std::size_t i = 0; i < walks.size(); ++i) {
    CHECK(std::vector<Step>(m.full_path(i).begin(), m.full_path(i).end()) ==
          std::vector<Step>(walks[i].begin(), walks[i].end()));
    for (std::size_t j = 0; j < walks.size(); ++j) CHECK(m.full.contains(i, j) == (dense[i][j] == 1));
  }
  // straight lines continue themselves
  for (Step c = 0; c < 4; ++c) {
    auto i = *m.full_index_of(std::vector<Step>{c, c, c});
    CHECK(m.full.contains(i, i));
  }
}

TEST_CASE("trimming leaves no empty rows or columns") {
  for (int n = 1; n <= 7; ++n) {
    auto m = build_escape_matrix(2, n, true);
    std::vector<int> in(m.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(!m.rows.row(i).empty());
      for (auto c : m.rows.row(i)) ++in[c];
    }
    for (int x : in) CHECK(x > 0);
    CHECK(m.trim_rounds <= 1);
    if (n <= 6) CHECK(m.size() == m.full_size());
  }
  auto m7 = build_escape_matrix(2, 7, true);
  CHECK(m7.size() < m7.full_size());
  CHECK(m7.trim_rounds == 1);
}

TEST_CASE("applying the operator") {
  auto m = build_escape_matrix(5, 1, true);
  std::vector<double> uniform(10, 0.1);
  auto out = apply_Fn(m, uniform);
  for (double v : out.values) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(out.Z == doctest::Approx(9.0));

  auto m2 = build_escape_matrix(2, 2, false);
  std::size_t straight = *m2.full_index_of(std::vector<Step>{0, 0});
  std::vector<double> point(m2.size(), 0.0);
  point[straight] = 1.0;
  auto image = apply_Fn(m2, point);
  double hits = 0;
  for (std::size_t i = 0; i < m2.size(); ++i) hits += m2.rows.contains(i, straight) ? 1 : 0;
  for (std::size_t i = 0; i < m2.size(); ++i) {
    CHECK(image.values[i] == doctest::Approx(m2.rows.contains(i, straight) ? 1.0 / hits : 0.0));
  }

  auto dense = oracle::dense_escape_matrix(2, oracle::all_saws(2, 2));
  std::vector<double> u(12, 1.0 / 12);
  std::vector<double> expected(12, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 12; ++j) expected[i] += dense[i][j] * u[j];
    total += expected[i];
  }
  auto got = apply_Fn(m2, u);
  for (std::size_t i = 0; i < 12; ++i) CHECK(got.values[i] == doctest::Approx(expected[i] / total).epsilon(1e-14));

  CHECK_THROWS_AS(apply_Fn(m2, std::vector<double>(12, 0.0)), ZeroTotalMass);
  CHECK_THROWS_AS(apply_Fn(m2, std::vector<double>(11, 0.1)), DimensionMismatch);
}

TEST_CASE("fixed point for single steps is uniform") {
  for (int d : {2, 5}) {
    auto m = build_escape_matrix(d, 1, true);
    auto fp = perron_fixed_point(m);
    for (double v : fp.measure.values) CHECK(v == doctest::Approx(1.0 / (2 * d)).epsilon(1e-12));
    CHECK(fp.measure.Z == doctest::Approx(2 * d - 1).epsilon(1e-12));
    CHECK(fp.primitivity_k == 2);
  }
}

TEST_CASE("fixed point agrees with a dense power iteration") {
  auto walks = oracle::all_saws(2, 3);
  auto ref = oracle::dense_perron(oracle::dense_escape_matrix(2, walks));
  auto m = build_escape_matrix(2, 3, true);
  REQUIRE(m.size() == 36);
  auto fp = perron_fixed_point(m);
  auto expected = as_double(ref.vector);
  for (std::size_t i = 0; i < 36; ++i) CHECK(fp.measure.values[i] == doctest::Approx(expected[i]).epsilon(1e-9));
  CHECK(fp.measure.Z == doctest::Approx(double(ref.value)).epsilon(1e-10));
  CHECK(fp.residual <= 1e-12);
  CHECK(fp.start_spread <= 1e-11);
  CHECK(fp.primitivity_k.has_value());
}

TEST_CASE("fixed point properties") {
  for (auto [d, n] : {std::pair{2, 4}, std::pair{2, 5}, std::pair{5, 2}, std::pair{2, 7}}) {
    auto m = build_escape_matrix(d, n, true);
    auto fp = perron_fixed_point(m);
    CHECK(fp.residual <= 1e-12);
    CHECK(fp.measure.Z > 0);
    CHECK(fp.measure.Z <= double(m.size()));
    double sum = 0;
    for (double v : fp.measure.values) {
      CHECK(v > 0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(symmetry_defect(m, fp.full_values) <= 1e-11);
    double full_sum = 0;
    for (double v : fp.full_values) full_sum += v;
    CHECK(full_sum == doctest::Approx(1.0).epsilon(1e-12));
    // lifted vector is fixed by the untrimmed operator too
    CHECK(l1_distance(apply_Fn_full(m, fp.full_values).values, fp.full_values) <= 1e-11);
  }
}

TEST_CASE("iteration limit") {
  auto m = build_escape_matrix(2, 3, true);
  PerronOptions opt;
  opt.max_iters = 1;
  CHECK_THROWS_AS(perron_fixed_point(m, opt), NoConvergence);
}

TEST_CASE("comparison with the finite-walk marginal") {
  auto m1 = build_escape_matrix(5, 1, true);
  auto fp1 = perron_fixed_point(m1);
  CHECK(compare_to_marginal(m1, fp1.full_values, 4).tv_distance < 1e-12);

  auto walks = oracle::all_saws(2, 2);
  auto ref = as_double(oracle::dense_perron(oracle::dense_escape_matrix(2, walks)).vector);
  double total = double(oracle::count(2, 6));
  double tv = 0;
  for (std::size_t i = 0; i < walks.size(); ++i) {
    tv += std::fabs(ref[i] - double(oracle::count_prefix(2, 6, walks[i])) / total);
  }
  tv /= 2;
  auto m = build_escape_matrix(2, 2, true);
  auto fp = perron_fixed_point(m);
  auto cmp = compare_to_marginal(m, fp.full_values, 6);
  CHECK(cmp.tv_distance == doctest::Approx(tv).epsilon(1e-9));
  CHECK(cmp.rows.size() == 12);

  // with m = n the marginal is uniform, which the fixed point is not
  for (int d : {2, 5}) {
    auto md = build_escape_matrix(d, 2, true);
    auto f = perron_fixed_point(md);
    CHECK(compare_to_marginal(md, f.full_values, 2).tv_distance > 1e-3);
  }
  CHECK_THROWS_AS(compare_to_marginal(m, fp.full_values, 1), InvalidArgument);
}

TEST_CASE("report formats") {
  auto m = build_escape_matrix(5, 1, true);
  auto fp = perron_fixed_point(m);
  auto json = fixed_point_report_json(m, fp, 3);
  CHECK(json.find("\"trimmed_size\": 10") != std::string::npos);
  CHECK(json.find("\"top_paths\"") != std::string::npos);
  auto csv = fixed_point_csv(m, fp);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}

TEST_CASE("size budget") {
  EscapeMatrixLimits limits;
  limits.max_paths = 100;
  CHECK_THROWS_AS(build_escape_matrix(2, 5, true, limits), BudgetExceeded);
  limits.max_paths = 1000;
  limits.max_nonzeros = 1000;
  CHECK_THROWS_AS(build_escape_matrix(2, 5, true, limits), BudgetExceeded);
}
