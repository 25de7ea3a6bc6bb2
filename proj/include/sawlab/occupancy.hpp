#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "sawlab/errors.hpp"

namespace sawlab {

// Lossless packing of lattice points with |coord| <= radius into a 64-bit
// key. Each axis gets `bits` bits holding coord + radius, so a unit step
// along an axis is a fixed additive delta on the key.
class PointPacker {
 public:
  PointPacker() = default;
  PointPacker(int dimension, std::int64_t radius);

  static bool fits(int dimension, std::int64_t radius) noexcept;

  int dimension() const noexcept { return dimension_; }
  std::int64_t radius() const noexcept { return radius_; }

  std::uint64_t origin() const noexcept { return origin_; }
  // Key delta for a direction code; add to move, subtract to undo.
  std::int64_t delta(int code) const noexcept { return deltas_[code]; }
  std::uint64_t step(std::uint64_t key, int code) const noexcept {
    return key + static_cast<std::uint64_t>(deltas_[code]);
  }
  std::uint64_t pack(std::span<const std::int64_t> coords) const;

 private:
  int dimension_ = 0;
  std::int64_t radius_ = 0;
  int bits_ = 0;
  std::uint64_t origin_ = 0;
  std::vector<std::int64_t> deltas_;
};

// Open-addressing hash set of packed keys with linear probing and
// backward-shift deletion. Capacity is fixed at construction and must
// exceed the number of simultaneously stored keys.
class OccupancySet {
 public:
  OccupancySet() = default;
  explicit OccupancySet(std::size_t max_elements);

  bool contains(std::uint64_t key) const noexcept {
    std::size_t i = slot(key);
    while (used_[i]) {
      if (keys_[i] == key) return true;
      i = (i + 1) & mask_;
    }
    return false;
  }

  // Returns false when the key was already present.
  bool insert(std::uint64_t key);
  void erase(std::uint64_t key) noexcept;
  void clear() noexcept;
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return keys_.size(); }

 private:
  std::size_t slot(std::uint64_t key) const noexcept {
    return static_cast<std::size_t>((key * 0x9E3779B97F4A7C15ULL) >> shift_);
  }

  std::vector<std::uint64_t> keys_;
  std::vector<std::uint8_t> used_;
  std::size_t mask_ = 0;
  int shift_ = 64;
  std::size_t size_ = 0;
};

}  // namespace sawlab
