#include "sawlab/occupancy.hpp"

#include <algorithm>

namespace sawlab {

namespace {

int bits_for(std::int64_t radius) {
  auto span = static_cast<std::uint64_t>(2 * radius + 1);
  return static_cast<int>(std::bit_width(span));
}

}  // namespace

bool PointPacker::fits(int dimension, std::int64_t radius) noexcept {
  if (dimension < 1 || radius < 0) return false;
  return static_cast<std::int64_t>(dimension) * bits_for(radius) <= 64;
}

PointPacker::PointPacker(int dimension, std::int64_t radius)
    : dimension_(dimension), radius_(radius) {
  if (!fits(dimension, radius)) {
    throw BudgetExceeded("lattice radius " + std::to_string(radius) +
                         " in d=" + std::to_string(dimension) +
                         " does not fit a 64-bit packed key");
  }
  bits_ = bits_for(radius);
  deltas_.resize(static_cast<std::size_t>(2 * dimension));
  origin_ = 0;
  for (int axis = 0; axis < dimension; ++axis) {
    auto unit = static_cast<std::int64_t>(std::uint64_t{1} << (axis * bits_));
    deltas_[2 * axis] = unit;
    deltas_[2 * axis + 1] = -unit;
    origin_ += static_cast<std::uint64_t>(radius) << (axis * bits_);
  }
}

std::uint64_t PointPacker::pack(std::span<const std::int64_t> coords) const {
  std::uint64_t key = 0;
  for (int axis = 0; axis < dimension_; ++axis) {
    std::int64_t c = coords[axis];
    if (c < -radius_ || c > radius_) {
      throw BudgetExceeded("coordinate outside packer radius");
    }
    key += static_cast<std::uint64_t>(c + radius_) << (axis * bits_);
  }
  return key;
}

OccupancySet::OccupancySet(std::size_t max_elements) {
  std::size_t cap = 16;
  while (cap < 2 * max_elements + 2) cap <<= 1;
  keys_.assign(cap, 0);
  used_.assign(cap, 0);
  mask_ = cap - 1;
  shift_ = 64 - std::countr_zero(cap);
}

bool OccupancySet::insert(std::uint64_t key) {
  if (2 * (size_ + 1) > keys_.size()) {
    throw BudgetExceeded("occupancy set capacity exceeded");
  }
  std::size_t i = slot(key);
  while (used_[i]) {
    if (keys_[i] == key) return false;
    i = (i + 1) & mask_;
  }
  used_[i] = 1;
  keys_[i] = key;
  ++size_;
  return true;
}

void OccupancySet::erase(std::uint64_t key) noexcept {
  std::size_t i = slot(key);
  while (used_[i] && keys_[i] != key) i = (i + 1) & mask_;
  if (!used_[i]) return;
  // Backward-shift: pull later members of the probe run into the hole.
  std::size_t hole = i;
  std::size_t j = i;
  for (;;) {
    j = (j + 1) & mask_;
    if (!used_[j]) break;
    std::size_t home = slot(keys_[j]);
    bool movable = hole <= j ? (home <= hole || home > j)
                             : (home <= hole && home > j);
    if (movable) {
      keys_[hole] = keys_[j];
      hole = j;
    }
  }
  used_[hole] = 0;
  --size_;
}

void OccupancySet::clear() noexcept {
  std::fill(used_.begin(), used_.end(), std::uint8_t{0});
  size_ = 0;
}

}  // namespace sawlab
