#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

namespace sawlab {

// Welford accumulator.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  // Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }
  double standard_error() const noexcept {
    return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

struct Interval {
  double lo = 0;
  double hi = 0;
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// Standardized distance of an observed binomial count from p * trials.
inline double binomial_z(std::uint64_t successes, std::uint64_t trials, double p) {
  double n = static_cast<double>(trials);
  double sd = std::sqrt(n * p * (1 - p));
  double diff = static_cast<double>(successes) - n * p;
  if (sd == 0) return diff == 0 ? 0.0 : INFINITY;
  return diff / sd;
}

inline double chi_square_critical(double df, double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), alpha));
}

struct ChiSquareResult {
  double statistic = 0;
  double df = 0;
  double critical = 0;
  double p_value = 1;
  bool passed = false;
};

// Goodness of fit of observed cell counts against expected cell
// probabilities (same length, probabilities summing to 1).
inline ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed,
                                       std::span<const double> expected_probability, double alpha) {
  double total = 0;
  for (auto o : observed) total += static_cast<double>(o);
  ChiSquareResult r;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = expected_probability[i] * total;
    if (e <= 0) continue;
    double diff = static_cast<double>(observed[i]) - e;
    r.statistic += diff * diff / e;
    ++cells;
  }
  r.df = cells > 1 ? static_cast<double>(cells - 1) : 1.0;
  boost::math::chi_squared dist(r.df);
  r.critical = boost::math::quantile(boost::math::complement(dist, alpha));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  r.passed = r.statistic <= r.critical;
  return r;
}

// Uniform expected distribution over `observed.size()` cells.
inline ChiSquareResult chi_square_uniform(std::span<const std::uint64_t> observed, double alpha) {
  std::vector<double> p(observed.size(), 1.0 / static_cast<double>(observed.size()));
  return chi_square_test(observed, p, alpha);
}

struct FTestResult {
  double statistic = 0;  // larger variance over smaller
  double critical = 0;
  double p_value = 1;
  bool significant = false;
};

// One-sided F test of H0: var(small) >= var(large) against var(small) < var(large).
inline FTestResult f_test_smaller(double var_small, std::uint64_t n_small, double var_large,
                                  std::uint64_t n_large, double alpha) {
  FTestResult r;
  boost::math::fisher_f dist(static_cast<double>(n_large - 1), static_cast<double>(n_small - 1));
  r.critical = boost::math::quantile(boost::math::complement(dist, alpha));
  if (var_small <= 0) {
    r.statistic = INFINITY;
    r.p_value = var_large > 0 ? 0.0 : 1.0;
    r.significant = var_large > 0;
    return r;
  }
  r.statistic = var_large / var_small;
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  r.significant = r.statistic > r.critical;
  return r;
}

}  // namespace sawlab
