#pragma once

// Brute-force reference computations for the test suites. Everything here
// works on explicit coordinate vectors and std::set, independently of the
// packed-key occupancy and backtracking code used by the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

namespace oracle {

using Coords = std::vector<long>;
using Walk = std::vector<int>;

inline Coords unit_move(Coords p, int code) {
  p[code / 2] += (code % 2 == 0) ? 1 : -1;
  return p;
}

inline std::vector<Coords> trace(int d, const Walk& w, Coords start = {}) {
  if (start.empty()) start.assign(d, 0);
  std::vector<Coords> pts{start};
  for (int c : w) pts.push_back(unit_move(pts.back(), c));
  return pts;
}

inline bool self_avoiding(int d, const Walk& w) {
  auto pts = trace(d, w);
  std::set<Coords> s(pts.begin(), pts.end());
  return s.size() == pts.size();
}

// All (2d)^n nearest-neighbour walks, filtered to the self-avoiding ones, in
// lexicographic order of direction codes.
inline std::vector<Walk> all_saws(int d, int n) {
  std::vector<Walk> out;
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::uint64_t>(2 * d);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    Walk w(n);
    std::uint64_t r = idx;
    for (int i = n - 1; i >= 0; --i) {
      w[i] = static_cast<int>(r % (2 * d));
      r /= (2 * d);
    }
    if (self_avoiding(d, w)) out.push_back(w);
  }
  return out;
}

inline std::uint64_t count(int d, int n) { return all_saws(d, n).size(); }

inline std::uint64_t count_end(int d, int n, const Coords& x) {
  std::uint64_t c = 0;
  for (const auto& w : all_saws(d, n)) {
    if (trace(d, w).back() == x) ++c;
  }
  return c;
}

inline bool starts_with(const Walk& w, const Walk& prefix) {
  if (prefix.size() > w.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (w[i] != prefix[i]) return false;
  }
  return true;
}

inline std::uint64_t count_prefix(int d, int n, const Walk& prefix) {
  std::uint64_t c = 0;
  for (const auto& w : all_saws(d, n)) c += starts_with(w, prefix) ? 1 : 0;
  return c;
}

inline Walk join(const Walk& a, const Walk& b) {
  Walk out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline bool concat_ok(int d, const Walk& a, const Walk& b) {
  return self_avoiding(d, join(a, b));
}

// Two SAWs from the origin meeting only there.
inline bool disjoint_arms(int d, const Walk& neg, const Walk& pos) {
  auto a = trace(d, neg);
  auto b = trace(d, pos);
  std::set<Coords> s(a.begin() + 1, a.end());
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (s.count(b[i])) return false;
  }
  return true;
}

inline std::uint64_t count_two_sided(int d, int m, int n, const Walk& neg_prefix,
                                     const Walk& pos_prefix) {
  auto negs = all_saws(d, m);
  auto poss = all_saws(d, n);
  std::uint64_t c = 0;
  for (const auto& a : negs) {
    if (!starts_with(a, neg_prefix)) continue;
    for (const auto& b : poss) {
      if (starts_with(b, pos_prefix) && disjoint_arms(d, a, b)) ++c;
    }
  }
  return c;
}

inline std::size_t occurrences(const Walk& w, const Walk& z) {
  std::size_t c = 0;
  for (std::size_t i = 0; i + z.size() <= w.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < z.size(); ++j) ok = ok && w[i + j] == z[j];
    c += ok ? 1 : 0;
  }
  return c;
}

// Number of `extra`-step continuations of `prefix`, by plain recursion over
// a std::set of visited coordinates.
inline std::uint64_t extensions_dfs(int d, std::set<Coords>& seen, const Coords& at, int extra) {
  if (extra == 0) return 1;
  std::uint64_t total = 0;
  for (int c = 0; c < 2 * d; ++c) {
    Coords next = unit_move(at, c);
    if (seen.count(next)) continue;
    seen.insert(next);
    total += extensions_dfs(d, seen, next, extra - 1);
    seen.erase(next);
  }
  return total;
}

inline std::uint64_t extensions(int d, const Walk& prefix, int extra) {
  auto pts = trace(d, prefix);
  std::set<Coords> seen(pts.begin(), pts.end());
  if (seen.size() != pts.size()) return 0;
  return extensions_dfs(d, seen, pts.back(), extra);
}

// Dense escape matrix A(i, j) = 1{walk j escapes walk i}.
inline std::vector<std::vector<int>> dense_escape_matrix(int d, const std::vector<Walk>& walks) {
  std::size_t n = walks.size();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = concat_ok(d, walks[i], walks[j]) ? 1 : 0;
  }
  return a;
}

struct Eigen {
  std::vector<long double> vector;  // normalized to sum 1
  long double value = 0;
};

// Plain (unnormalized-operator) power iteration in long double with a shift
// to avoid periodicity: iterates (A + I) x, eigenvalue read off as |Ax|/|x|.
inline Eigen dense_perron(const std::vector<std::vector<int>>& a, int iters = 20000) {
  std::size_t n = a.size();
  std::vector<long double> x(n, 1.0L / n), y(n);
  for (int it = 0; it < iters; ++it) {
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      long double acc = x[i];
      for (std::size_t j = 0; j < n; ++j) acc += a[i][j] * x[j];
      y[i] = acc;
      s += acc;
    }
    long double diff = 0;
    for (std::size_t i = 0; i < n; ++i) {
      long double v = y[i] / s;
      diff += std::fabs(v - x[i]);
      x[i] = v;
    }
    if (diff < 1e-16L) break;
  }
  long double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) total += a[i][j] * x[j];
  }
  return {x, total};
}

}  // namespace oracle
