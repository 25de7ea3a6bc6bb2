#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sawlab/lattice.hpp"
#include "sawlab/numeric.hpp"

namespace sawlab {

class CountCache;

enum class CountKind { plain, end, prefix, two_sided };

std::string to_string(CountKind kind);
CountKind count_kind_from_string(const std::string& s);

// Identifies one cached count: dimension, kind, length and the condition
// rendered as text ("" for plain counts).
struct CountKey {
  int d = 0;
  CountKind kind = CountKind::plain;
  int n = 0;
  std::string key;

  auto operator<=>(const CountKey&) const = default;
};

std::string end_condition(const LatticePoint& x);
std::string prefix_condition(std::span<const Step> zeta);
std::string two_sided_condition(int m, const TwoSidedPath& xi);

// Exact counts for one dimension.
class CountTable {
 public:
  explicit CountTable(int dimension = 1) : dimension_(dimension) {}

  int dimension() const noexcept { return dimension_; }
  std::optional<BigCount> get(CountKind kind, int n, const std::string& key = "") const;
  void put(CountKind kind, int n, const std::string& key, const BigCount& value);
  const std::map<CountKey, BigCount>& entries() const noexcept { return entries_; }

  // Plain counts c_n currently held, indexed by n.
  std::map<int, BigCount> plain_counts() const;

  // Every cached triple a + b = c with c_{a+b} > c_a * c_b (should be empty).
  std::vector<std::pair<int, int>> submultiplicativity_violations() const;

 private:
  int dimension_;
  std::map<CountKey, BigCount> entries_;
};

struct EnumOptions {
  unsigned workers = 0;           // 0 = hardware concurrency
  int split_depth = 3;            // frontier depth for task splitting
  std::uint64_t node_limit = 0;   // 0 = unlimited
  bool symmetry_reduction = true; // fix the first step for plain counts
  std::string checkpoint_path;    // empty = no checkpointing
  std::size_t checkpoint_every = 64;  // completed tasks between writes
};

struct AsymptoticRow {
  int n = 0;
  BigCount count;
  std::optional<Rational> ratio;            // c_n / c_{n-1}
  std::optional<double> root;               // c_n^(1/n)
  std::optional<double> amplitude;          // c_n / ratio^n
  std::optional<Rational> nonintersection;  // c_{2n} / c_n^2 when 2n <= n_max
};

// Depth-first enumerator with task splitting, node budget, checkpoints and
// an in-memory count table (optionally backed by a persistent cache).
class Enumerator {
 public:
  explicit Enumerator(EnumOptions options = {});

  const EnumOptions& options() const noexcept { return options_; }
  void set_options(EnumOptions options) { options_ = std::move(options); }
  void attach_cache(CountCache* cache) { cache_ = cache; }

  BigCount count_saws(int d, int n);
  BigCount count_ending_at(int d, int n, const LatticePoint& x);
  // c_n(zeta): n-step walks starting with zeta.
  BigCount count_extensions(int d, int n, const Path& zeta);
  // Two-sided paths with sides (m, n) extending xi; empty xi gives c_{m+n}.
  BigCount count_two_sided(int d, int m, int n, const TwoSidedPath& xi);

  double truncated_two_point(int d, const LatticePoint& x, int max_length, double mu);
  std::vector<AsymptoticRow> asymptotic_table(int d, int n_max);

  const CountTable& table(int d);

 private:
  std::optional<BigCount> lookup(const CountKey& key);
  void store(const CountKey& key, const BigCount& value);

  EnumOptions options_;
  CountCache* cache_ = nullptr;
  std::map<int, CountTable> tables_;
  std::mutex mutex_;
};

// --- listing -----------------------------------------------------------------

// Every n-step SAW as a flat array of n * c_n codes, canonical order.
// Throws BudgetExceeded when more than max_paths walks would be produced.
std::vector<Step> list_saws(int d, int n, std::size_t max_paths = 50'000'000);

// Every n-step walk escaping `head`, flat, canonical order.
std::vector<Step> list_escapers(int d, int n, std::span<const Step> head,
                                std::size_t max_paths = 50'000'000);

// Sequential visitors.
void for_each_saw(int d, int n, const std::function<void(std::span<const Step>)>& fn);
void for_each_escaper(int d, int n, std::span<const Step> head,
                      const std::function<void(std::span<const Step>)>& fn);

// True when some n-step walk escapes head (c_{k+n}(head) > 0).
bool has_escaper(int d, int n, std::span<const Step> head,
                 std::uint64_t node_limit = 0);

}  // namespace sawlab
