#include "sawlab/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "sawlab/detail/walker.hpp"
#include "sawlab/enumerate.hpp"
#include "sawlab/errors.hpp"
#include "sawlab/parallel.hpp"
#include "sawlab/rng.hpp"

namespace sawlab {

using detail::Walker;

namespace {

// Lexicographic comparison of the walk at position `pos` with `steps`.
struct PathOrder {
  const std::vector<Step>& paths;
  std::size_t n;
  bool operator()(std::size_t pos, std::span<const Step> steps) const {
    auto first = paths.begin() + static_cast<std::ptrdiff_t>(pos * n);
    return std::lexicographical_compare(first, first + static_cast<std::ptrdiff_t>(n), steps.begin(), steps.end());
  }
};

std::optional<std::size_t> locate(const std::vector<Step>& paths, std::size_t n, std::size_t count,
                                  std::size_t from, std::span<const Step> steps) {
  if (steps.size() != n) return std::nullopt;
  if (n == 0) return count == 1 ? std::optional<std::size_t>(0) : std::nullopt;
  std::size_t lo = from, hi = count;
  PathOrder less{paths, n};
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (less(mid, steps)) lo = mid + 1; else hi = mid;
  }
  if (lo == count) return std::nullopt;
  auto first = paths.begin() + static_cast<std::ptrdiff_t>(lo * n);
  if (!std::equal(first, first + static_cast<std::ptrdiff_t>(n), steps.begin())) return std::nullopt;
  return lo;
}

SparseRows restrict_rows(const SparseRows& full, const std::vector<std::uint32_t>& kept) {
  std::vector<std::int64_t> position(full.size(), -1);
  for (std::size_t i = 0; i < kept.size(); ++i) position[kept[i]] = static_cast<std::int64_t>(i);
  SparseRows out;
  out.offsets.reserve(kept.size() + 1);
  for (auto r : kept) {
    for (auto c : full.row(r)) {
      if (position[c] >= 0) out.cols.push_back(static_cast<std::uint32_t>(position[c]));
    }
    out.offsets.push_back(out.cols.size());
  }
  return out;
}

MeasureVector multiply(const SparseRows& rows, std::span<const double> p, unsigned workers) {
  if (p.size() != rows.size()) throw DimensionMismatch("measure length differs from matrix size");
  MeasureVector out;
  out.values.assign(rows.size(), 0.0);
  constexpr std::size_t kBlock = 256;
  std::size_t blocks = (rows.size() + kBlock - 1) / kBlock;
  std::vector<double> block_sums(blocks, 0.0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    std::size_t end = std::min(rows.size(), (b + 1) * kBlock);
    double block = 0;
    for (std::size_t i = b * kBlock; i < end; ++i) {
      double acc = 0;
      for (auto c : rows.row(i)) acc += p[c];
      out.values[i] = acc;
      block += acc;
    }
    block_sums[b] = block;
  });
  double total = 0;
  for (double s : block_sums) total += s;
  if (!(total > 0)) throw ZeroTotalMass("the measure gives no mass to any escape");
  for (double& v : out.values) v /= total;
  out.Z = total;
  return out;
}

}  // namespace

bool SparseRows::contains(std::size_t i, std::size_t j) const noexcept {
  auto r = row(i);
  return std::binary_search(r.begin(), r.end(), static_cast<std::uint32_t>(j));
}

std::optional<std::size_t> EscapeMatrix::full_index_of(std::span<const Step> steps) const {
  return locate(paths, static_cast<std::size_t>(length), full_size(), 0, steps);
}

std::optional<std::size_t> EscapeMatrix::index_of(std::span<const Step> steps) const {
  auto j = full_index_of(steps);
  if (!j) return std::nullopt;
  auto it = std::lower_bound(kept.begin(), kept.end(), static_cast<std::uint32_t>(*j));
  if (it == kept.end() || *it != *j) return std::nullopt;
  return static_cast<std::size_t>(it - kept.begin());
}

EscapeMatrix build_escape_matrix(int d, int n, bool trim, const EscapeMatrixLimits& limits) {
  if (d < 1) throw InvalidArgument("dimension must be at least 1");
  if (n < 1) throw InvalidArgument("length must be at least 1");
  EscapeMatrix m;
  m.dimension = d;
  m.length = n;
  m.paths = list_saws(d, n, limits.max_paths);
  const std::size_t count = m.paths.size() / static_cast<std::size_t>(n);
  const auto len = static_cast<std::size_t>(n);

  std::vector<std::vector<std::uint32_t>> row_cols(count);
  std::atomic<std::size_t> nonzeros{0};
  parallel_for(count, limits.workers, [&](std::size_t i) {
    Walker w(d, 2 * n, 2 * len + 1);
    w.push_all(m.full_path(i));
    auto& cols = row_cols[i];
    std::size_t from = 0;
    auto leaf = [&](Walker& walker) {
      auto j = locate(m.paths, len, count, from, walker.steps().subspan(len));
      cols.push_back(static_cast<std::uint32_t>(*j));
      from = *j + 1;
    };
    w.visit(n, leaf);
    if (nonzeros.fetch_add(cols.size()) + cols.size() > limits.max_nonzeros) {
      throw BudgetExceeded("escape matrix exceeds " + std::to_string(limits.max_nonzeros) + " nonzeros");
    }
  });
  m.full.offsets.reserve(count + 1);
  m.full.cols.reserve(nonzeros.load());
  for (auto& cols : row_cols) {
    m.full.cols.insert(m.full.cols.end(), cols.begin(), cols.end());
    m.full.offsets.push_back(m.full.cols.size());
    std::vector<std::uint32_t>().swap(cols);
  }

  std::vector<char> alive(count, 1);
  if (trim) {
    // Removing a walk can empty another row or column, so repeat until stable.
    for (;;) {
      std::vector<std::size_t> out_degree(count, 0), in_degree(count, 0);
      for (std::size_t i = 0; i < count; ++i) {
        if (!alive[i]) continue;
        for (auto c : m.full.row(i)) {
          if (!alive[c]) continue;
          ++out_degree[i];
          ++in_degree[c];
        }
      }
      bool changed = false;
      for (std::size_t i = 0; i < count; ++i) {
        if (alive[i] && (out_degree[i] == 0 || in_degree[i] == 0)) {
          alive[i] = 0;
          changed = true;
        }
      }
      if (!changed) break;
      ++m.trim_rounds;
    }
  }
  m.trimmed = trim;
  for (std::size_t i = 0; i < count; ++i) {
    if (alive[i]) m.kept.push_back(static_cast<std::uint32_t>(i));
  }
  m.rows = m.kept.size() == count ? m.full : restrict_rows(m.full, m.kept);
  return m;
}

MeasureVector apply_Fn(const EscapeMatrix& m, std::span<const double> p, unsigned workers) {
  return multiply(m.rows, p, workers);
}

MeasureVector apply_Fn_full(const EscapeMatrix& m, std::span<const double> p, unsigned workers) {
  return multiply(m.full, p, workers);
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("vectors differ in length");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

std::optional<int> primitivity_witness(const SparseRows& rows, int max_k) {
  const std::size_t n = rows.size();
  if (n == 0) return std::nullopt;
  const std::size_t words = (n + 63) / 64;
  using Bits = std::vector<std::uint64_t>;
  std::vector<Bits> a(n, Bits(words, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (auto c : rows.row(i)) a[i][c / 64] |= 1ULL << (c % 64);
  }
  const std::uint64_t tail_mask = (n % 64 == 0) ? ~0ULL : ((1ULL << (n % 64)) - 1);
  auto all_positive = [&](const std::vector<Bits>& m) {
    for (const auto& row : m) {
      for (std::size_t w = 0; w + 1 < words; ++w) {
        if (row[w] != ~0ULL) return false;
      }
      if ((row[words - 1] & tail_mask) != tail_mask) return false;
    }
    return true;
  };
  std::vector<Bits> power = a;
  for (int k = 1; k <= max_k; ++k) {
    if (all_positive(power)) return k;
    if (k == max_k) break;
    std::vector<Bits> next(n, Bits(words, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t bits = power[i][w];
        while (bits != 0) {
          std::size_t j = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
          bits &= bits - 1;
          for (std::size_t x = 0; x < words; ++x) next[i][x] |= a[j][x];
        }
      }
    }
    power.swap(next);
  }
  return std::nullopt;
}

FixedPoint perron_fixed_point(const EscapeMatrix& m, const PerronOptions& options) {
  if (!(options.tol > 0)) throw InvalidArgument("tolerance must be positive");
  const std::size_t n = m.size();
  if (n == 0) throw ZeroTotalMass("escape matrix is empty after trimming");

  std::vector<std::vector<double>> starts;
  starts.emplace_back(n, 1.0 / static_cast<double>(n));
  Rng base(options.seed);
  for (int s = 0; s < options.random_starts; ++s) {
    Rng rng = base.derive(static_cast<std::uint64_t>(s));
    std::vector<double> v(n);
    double total = 0;
    for (auto& x : v) {
      x = 0.05 + rng.uniform();
      total += x;
    }
    for (auto& x : v) x /= total;
    starts.push_back(std::move(v));
  }

  FixedPoint fp;
  fp.starts = starts.size();
  std::vector<std::vector<double>> results;
  for (auto& p : starts) {
    std::uint64_t it = 0;
    double residual = INFINITY;
    MeasureVector current{p, 0};
    for (;;) {
      MeasureVector next = apply_Fn(m, current.values, options.workers);
      residual = l1_distance(next.values, current.values);
      current = std::move(next);
      ++it;
      if (residual <= options.tol) break;
      if (it >= options.max_iters) throw NoConvergence("no convergence after " + std::to_string(it) + " iterations");
    }
    fp.iters = std::max(fp.iters, it);
    results.push_back(std::move(current.values));
  }
  for (std::size_t a = 0; a < results.size(); ++a) {
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      fp.start_spread = std::max(fp.start_spread, l1_distance(results[a], results[b]));
    }
  }
  if (fp.start_spread > 10 * options.tol) {
    throw StartsDisagree("fixed points from different starts differ by " + std::to_string(fp.start_spread));
  }

  fp.measure.values = results.front();
  MeasureVector image = apply_Fn(m, fp.measure.values, options.workers);
  fp.measure.Z = image.Z;
  fp.residual = l1_distance(image.values, fp.measure.values);

  // Lift to SAW_n: extend by zero and let the untrimmed operator fill in the
  // removed walks (their mass settles after a few applications).
  fp.full_values.assign(m.full_size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) fp.full_values[m.kept[i]] = fp.measure.values[i];
  if (n != m.full_size()) {
    for (int round = 0; round < m.trim_rounds + 64; ++round) {
      MeasureVector next = apply_Fn_full(m, fp.full_values, options.workers);
      double change = l1_distance(next.values, fp.full_values);
      fp.full_values = std::move(next.values);
      if (change <= options.tol) break;
    }
  }

  if (options.primitivity_search && n <= options.primitivity_max_size) {
    fp.primitivity_searched = true;
    fp.primitivity_k = primitivity_witness(m.rows, 2 * m.length + 4);
  }
  return fp;
}

double symmetry_defect(const EscapeMatrix& m, std::span<const double> full_values) {
  if (full_values.size() != m.full_size()) throw DimensionMismatch("measure length differs from matrix size");
  double worst = 0;
  for (const auto& g : all_signed_permutations(m.dimension)) {
    for (std::size_t j = 0; j < m.full_size(); ++j) {
      auto image = g.apply(m.full_path(j));
      auto k = m.full_index_of(image);
      if (!k) return INFINITY;
      worst = std::max(worst, std::fabs(full_values[*k] - full_values[j]));
    }
  }
  return worst;
}

MarginalComparison compare_to_marginal(const EscapeMatrix& matrix, std::span<const double> full_values, int m,
                                       unsigned workers) {
  if (m < matrix.length) throw InvalidArgument("marginal length must be at least the path length");
  if (full_values.size() != matrix.full_size()) throw DimensionMismatch("measure length differs from matrix size");
  const std::size_t count = matrix.full_size();
  std::vector<std::uint64_t> extensions(count, 0);
  parallel_for(count, workers, [&](std::size_t j) {
    Walker w(matrix.dimension, m, static_cast<std::size_t>(m) + 1);
    w.push_all(matrix.full_path(j));
    extensions[j] = w.count(m - matrix.length);
  });
  long double total = 0;
  for (auto e : extensions) total += static_cast<long double>(e);

  MarginalComparison out;
  out.m = m;
  long double tv = 0;
  for (std::size_t j = 0; j < count; ++j) {
    MarginalRow row;
    row.index = j;
    auto s = matrix.full_path(j);
    row.steps.assign(s.begin(), s.end());
    row.fixed_point = full_values[j];
    row.marginal = static_cast<double>(static_cast<long double>(extensions[j]) / total);
    tv += std::fabs(static_cast<long double>(row.fixed_point) - static_cast<long double>(extensions[j]) / total);
    out.rows.push_back(std::move(row));
  }
  out.tv_distance = static_cast<double>(tv / 2);
  return out;
}

std::string fixed_point_report_json(const EscapeMatrix& m, const FixedPoint& fp, std::size_t top) {
  nlohmann::ordered_json j;
  j["d"] = m.dimension;
  j["n"] = m.length;
  j["size"] = m.full_size();
  j["trimmed_size"] = m.size();
  j["Z"] = fp.measure.Z;
  j["residual"] = fp.residual;
  j["iters"] = fp.iters;
  j["start_spread"] = fp.start_spread;
  if (fp.primitivity_k) j["primitivity_k"] = *fp.primitivity_k;
  std::vector<std::size_t> order(m.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fp.measure.values[a] > fp.measure.values[b]; });
  auto paths = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < std::min(top, order.size()); ++r) {
    nlohmann::ordered_json p;
    p["steps"] = steps_to_string(m.path(order[r]));
    p["prob"] = fp.measure.values[order[r]];
    paths.push_back(p);
  }
  j["top_paths"] = paths;
  return j.dump(2) + "\n";
}

std::string fixed_point_csv(const EscapeMatrix& m, const FixedPoint& fp) {
  std::ostringstream out;
  out << "path_index,steps,probability\n";
  char buf[64];
  for (std::size_t j = 0; j < m.full_size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", fp.full_values[j]);
    out << j << ",\"" << steps_to_string(m.full_path(j)) << "\"," << buf << "\n";
  }
  return out.str();
}

}  // namespace sawlab
