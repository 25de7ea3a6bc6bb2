#pragma once

// Backtracking engine shared by the enumerator, the spectral module and the
// pattern statistics. Not part of the stable interface.

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "sawlab/errors.hpp"
#include "sawlab/lattice.hpp"
#include "sawlab/occupancy.hpp"

namespace sawlab::detail {

// Thrown inside a task when the shared node budget runs out.
struct BudgetAbort {};

class NodeBudget {
 public:
  explicit NodeBudget(std::uint64_t limit = 0) : limit_(limit) {}
  // Adds `nodes`; returns false once the limit is exceeded.
  bool charge(std::uint64_t nodes) noexcept {
    if (limit_ == 0) return true;
    return used_.fetch_add(nodes, std::memory_order_relaxed) + nodes <= limit_;
  }
  bool exhausted() const noexcept {
    return limit_ != 0 && used_.load(std::memory_order_relaxed) > limit_;
  }
  std::uint64_t used() const noexcept { return used_.load(); }

 private:
  std::uint64_t limit_;
  std::atomic<std::uint64_t> used_{0};
};

// A walk under construction: packed cursor, occupancy of every vertex placed
// so far and the step stack. The cursor can be moved to another occupied
// vertex to grow a second arm (two-sided counts).
class Walker {
 public:
  Walker(int dimension, std::int64_t radius, std::size_t max_vertices,
         NodeBudget* budget = nullptr)
      : dimension_(dimension),
        packer_(dimension, radius),
        occupied_(max_vertices + 1),
        cursor_(packer_.origin()),
        budget_(budget) {
    occupied_.insert(cursor_);
  }

  int dimension() const noexcept { return dimension_; }
  const PointPacker& packer() const noexcept { return packer_; }
  std::uint64_t cursor() const noexcept { return cursor_; }
  void set_cursor(std::uint64_t key) noexcept { cursor_ = key; }
  std::span<const Step> steps() const noexcept { return steps_; }

  bool is_free(int code) const noexcept {
    return !occupied_.contains(packer_.step(cursor_, code));
  }
  bool occupied(std::uint64_t key) const noexcept { return occupied_.contains(key); }

  void push(int code) {
    cursor_ = packer_.step(cursor_, code);
    occupied_.insert(cursor_);
    steps_.push_back(static_cast<Step>(code));
  }
  void pop() noexcept {
    occupied_.erase(cursor_);
    cursor_ -= static_cast<std::uint64_t>(packer_.delta(steps_.back()));
    steps_.pop_back();
  }

  // Pushes trusted steps (already known to avoid the current occupancy).
  void push_all(std::span<const Step> steps) {
    for (auto s : steps) {
      if (!is_free(s)) throw NotSelfAvoiding(steps_.size() + 1);
      push(s);
    }
  }

  void tick() {
    if (budget_ != nullptr && ++pending_ >= 4096) flush();
  }
  void flush() {
    if (budget_ != nullptr && pending_ > 0) {
      bool ok = budget_->charge(pending_);
      pending_ = 0;
      if (!ok) throw BudgetAbort{};
    }
  }

  // Charges outstanding nodes without aborting; call when a task finishes.
  void settle() noexcept {
    if (budget_ != nullptr && pending_ > 0) {
      budget_->charge(pending_);
      pending_ = 0;
    }
  }

  // Number of self-avoiding continuations of `remaining` steps.
  std::uint64_t count(int remaining) {
    if (remaining == 0) return 1;
    tick();
    std::uint64_t total = 0;
    const int codes = 2 * dimension_;
    if (remaining == 1) {
      for (int c = 0; c < codes; ++c) total += is_free(c) ? 1 : 0;
      return total;
    }
    for (int c = 0; c < codes; ++c) {
      if (!is_free(c)) continue;
      push(c);
      total += count(remaining - 1);
      pop();
    }
    return total;
  }

  // Calls leaf(*this) for every continuation of `remaining` steps, in
  // canonical (lexicographic direction code) order.
  template <class Leaf>
  void visit(int remaining, Leaf& leaf) {
    if (remaining == 0) {
      leaf(*this);
      return;
    }
    tick();
    const int codes = 2 * dimension_;
    for (int c = 0; c < codes; ++c) {
      if (!is_free(c)) continue;
      push(c);
      visit(remaining - 1, leaf);
      pop();
    }
  }

  // True if at least one continuation of `remaining` steps exists.
  bool any(int remaining) {
    if (remaining == 0) return true;
    tick();
    const int codes = 2 * dimension_;
    for (int c = 0; c < codes; ++c) {
      if (!is_free(c)) continue;
      push(c);
      bool found = any(remaining - 1);
      pop();
      if (found) return true;
    }
    return false;
  }

 private:
  int dimension_;
  PointPacker packer_;
  OccupancySet occupied_;
  std::uint64_t cursor_;
  std::vector<Step> steps_;
  NodeBudget* budget_;
  std::uint64_t pending_ = 0;
};

// All step sequences of `depth` steps that extend `base` without collision,
// in canonical order.
std::vector<std::vector<Step>> extension_prefixes(int dimension,
                                                  std::span<const Step> base,
                                                  int depth, std::int64_t radius);

}  // namespace sawlab::detail
