#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sawlab/lattice.hpp"

namespace sawlab {

// Compressed sparse 0/1 rows.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;

  std::size_t size() const noexcept { return offsets.size() - 1; }
  std::size_t nonzeros() const noexcept { return cols.size(); }
  std::span<const std::uint32_t> row(std::size_t i) const noexcept {
    return {cols.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  bool contains(std::size_t i, std::size_t j) const noexcept;
};

struct EscapeMatrixLimits {
  std::size_t max_paths = 200'000;
  std::size_t max_nonzeros = 200'000'000;
  unsigned workers = 0;
};

// Escape relation on SAW_n: entry (i, j) is 1 when walk j escapes walk i.
// `full` covers every walk in canonical order; `rows` is the same relation
// restricted to `kept` (everything, unless trimmed).
struct EscapeMatrix {
  int dimension = 0;
  int length = 0;
  std::vector<Step> paths;  // flat, canonical order
  SparseRows full;
  bool trimmed = false;
  int trim_rounds = 0;
  std::vector<std::uint32_t> kept;  // kept[i] = position in the full index
  SparseRows rows;

  std::size_t size() const noexcept { return kept.size(); }
  std::size_t full_size() const noexcept { return full.size(); }
  std::span<const Step> full_path(std::size_t j) const noexcept {
    return std::span<const Step>(paths).subspan(j * static_cast<std::size_t>(length), length);
  }
  std::span<const Step> path(std::size_t i) const noexcept { return full_path(kept[i]); }

  // Position of a walk in the full index.
  std::optional<std::size_t> full_index_of(std::span<const Step> steps) const;
  // Position among the kept walks.
  std::optional<std::size_t> index_of(std::span<const Step> steps) const;
};

EscapeMatrix build_escape_matrix(int d, int n, bool trim, const EscapeMatrixLimits& limits = {});

struct MeasureVector {
  std::vector<double> values;
  double Z = 0;  // total mass of the matrix-vector product before normalizing
};

// Normalized M * P over the kept indices.
MeasureVector apply_Fn(const EscapeMatrix& m, std::span<const double> p, unsigned workers = 1);
// Same over the full (untrimmed) relation.
MeasureVector apply_Fn_full(const EscapeMatrix& m, std::span<const double> p, unsigned workers = 1);

double l1_distance(std::span<const double> a, std::span<const double> b);

struct PerronOptions {
  double tol = 1e-12;
  std::uint64_t max_iters = 1'000'000;
  int random_starts = 2;
  std::uint64_t seed = 0;
  bool primitivity_search = true;
  std::size_t primitivity_max_size = 2048;
  unsigned workers = 1;
};

struct FixedPoint {
  MeasureVector measure;               // over the kept indices
  std::vector<double> full_values;     // lifted to every walk of SAW_n
  double residual = 0;                 // |F P - P|_1
  std::uint64_t iters = 0;             // largest over all starts
  double start_spread = 0;             // largest pairwise L1 distance
  std::size_t starts = 0;
  std::optional<int> primitivity_k;    // A^k entrywise positive
  bool primitivity_searched = false;
};

FixedPoint perron_fixed_point(const EscapeMatrix& m, const PerronOptions& options = {});

// Smallest k <= max_k with the boolean power A^k all-positive.
std::optional<int> primitivity_witness(const SparseRows& rows, int max_k);

// Largest |P(g zeta) - P(zeta)| over all signed permutations g (full index).
double symmetry_defect(const EscapeMatrix& m, std::span<const double> full_values);

struct MarginalRow {
  std::size_t index = 0;
  std::vector<Step> steps;
  double fixed_point = 0;
  double marginal = 0;  // c_m(zeta) / c_m
};

struct MarginalComparison {
  int m = 0;
  double tv_distance = 0;
  std::vector<MarginalRow> rows;
};

// Compares the lifted fixed point with the first-n-step marginal of the
// uniform m-step walk.
MarginalComparison compare_to_marginal(const EscapeMatrix& matrix, std::span<const double> full_values, int m,
                                       unsigned workers = 0);

std::string fixed_point_report_json(const EscapeMatrix& m, const FixedPoint& fp, std::size_t top = 10);
std::string fixed_point_csv(const EscapeMatrix& m, const FixedPoint& fp);

}  // namespace sawlab
