#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sawlab/errors.hpp"
#include "sawlab/numeric.hpp"

namespace sawlab {

// Direction code c in [0, 2d): axis c/2, positive when c is even.
// So 0 = +e1, 1 = -e1, 2 = +e2, ...
using Step = std::uint8_t;

constexpr int axis_of(int code) noexcept { return code >> 1; }
constexpr int sign_of(int code) noexcept { return (code & 1) ? -1 : 1; }
constexpr int reverse_of(int code) noexcept { return code ^ 1; }
constexpr int plus(int axis) noexcept { return 2 * axis; }
constexpr int minus(int axis) noexcept { return 2 * axis + 1; }

class LatticePoint {
 public:
  LatticePoint() = default;
  explicit LatticePoint(int dimension) : coords_(dimension, 0) {}
  explicit LatticePoint(std::vector<std::int64_t> coords)
      : coords_(std::move(coords)) {}

  static LatticePoint unit(int dimension, int code);

  int dimension() const noexcept { return static_cast<int>(coords_.size()); }
  std::span<const std::int64_t> coords() const noexcept { return coords_; }
  std::int64_t operator[](int axis) const { return coords_[axis]; }

  LatticePoint& move(int code) {
    coords_[axis_of(code)] += sign_of(code);
    return *this;
  }
  LatticePoint operator+(const LatticePoint& o) const;
  LatticePoint operator-(const LatticePoint& o) const;

  std::int64_t norm1() const noexcept;
  std::int64_t norm2_squared() const noexcept;
  std::int64_t max_abs() const noexcept;

  auto operator<=>(const LatticePoint&) const = default;
  bool operator==(const LatticePoint&) const = default;

  std::string str() const;

 private:
  std::vector<std::int64_t> coords_;
};

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept;
};

// A self-avoiding nearest-neighbour path, stored as one direction code per
// step. Instances are always self-avoiding: the only public ways to build one
// validate the steps.
class Path {
 public:
  Path() = default;  // length-0 path in d = 1 at the origin
  explicit Path(int dimension) : dimension_(dimension), anchor_(dimension) {}

  // Validating constructor; throws BadDirection or NotSelfAvoiding.
  Path(int dimension, std::vector<Step> steps);
  Path(int dimension, std::vector<Step> steps, LatticePoint anchor);

  // Skips validation. Callers must already know the steps form a SAW.
  static Path trusted(int dimension, std::vector<Step> steps);

  int dimension() const noexcept { return dimension_; }
  std::size_t length() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }
  std::span<const Step> steps() const noexcept { return steps_; }
  const LatticePoint& anchor() const noexcept { return anchor_; }

  LatticePoint vertex(std::size_t i) const;
  LatticePoint endpoint() const { return vertex(length()); }
  std::vector<LatticePoint> vertices() const;

  Path reanchored(LatticePoint anchor) const;
  // Direction codes of the sub-walk between vertices [from, to].
  std::vector<Step> window(std::size_t from, std::size_t to) const;

  bool operator==(const Path& o) const {
    return dimension_ == o.dimension_ && steps_ == o.steps_ &&
           anchor_ == o.anchor_;
  }

  std::string str() const;

 private:
  int dimension_ = 1;
  std::vector<Step> steps_;
  LatticePoint anchor_{1};
};

// Two-sided path on [-m, n]: vertex -j is negative().vertex(j) and vertex j
// is positive().vertex(j). Both sides start at the origin and share no other
// vertex.
class TwoSidedPath {
 public:
  TwoSidedPath() = default;
  explicit TwoSidedPath(int dimension)
      : negative_(dimension), positive_(dimension) {}
  TwoSidedPath(Path negative, Path positive);

  int dimension() const noexcept { return positive_.dimension(); }
  std::size_t negative_length() const noexcept { return negative_.length(); }
  std::size_t positive_length() const noexcept { return positive_.length(); }
  std::size_t length() const noexcept {
    return negative_length() + positive_length();
  }
  const Path& negative() const noexcept { return negative_; }
  const Path& positive() const noexcept { return positive_; }

  LatticePoint vertex(std::int64_t i) const;

  // Direction codes read from vertex -m to vertex n.
  std::vector<Step> forward_steps() const;

  bool operator==(const TwoSidedPath&) const = default;

 private:
  Path negative_;
  Path positive_;
};

// --- path operations ---------------------------------------------------------

// Returns the first vertex index that repeats an earlier vertex, if any.
// Throws BadDirection for out-of-range codes.
std::optional<std::size_t> first_repeat(int dimension,
                                        std::span<const Step> steps);

Path validate(std::span<const Step> raw_steps, int dimension);

// T^m: the path k -> w(k + m) - w(m), anchored at the origin.
Path shift(const Path& path, std::size_t m);
// Two-sided shift moves m vertices from the positive side to the negative.
TwoSidedPath shift(const TwoSidedPath& path, std::size_t m);

std::optional<Path> try_concat(const Path& first, const Path& second);
Path concat(const Path& first, const Path& second);

// True iff `tail` escapes `head`: head followed by tail is self-avoiding.
bool escapes(const Path& tail, const Path& head);
bool escapes_steps(int dimension, std::span<const Step> tail,
                   std::span<const Step> head);

// Number of i in [0, n - k] with w[i, i + k] equal to pattern + w(i).
std::size_t count_occurrences(std::span<const Step> walk,
                              std::span<const Step> pattern) noexcept;
std::vector<std::size_t> occurrence_positions(std::span<const Step> walk,
                                              std::span<const Step> pattern);

// (1/n) * #{0 <= i <= n - k : pattern occurs at i}.
Rational pattern_density(const Path& walk, const Path& pattern);

// --- symmetries --------------------------------------------------------------

// Signed permutation of coordinates: axis a goes to axis perm[a] with sign
// signs[a]. Acts on direction codes, points and paths.
class SignedPermutation {
 public:
  SignedPermutation(std::vector<int> perm, std::vector<int> signs);
  static SignedPermutation identity(int dimension);

  int dimension() const noexcept { return static_cast<int>(perm_.size()); }
  int map_code(int code) const noexcept { return code_map_[code]; }
  LatticePoint apply(const LatticePoint& p) const;
  Path apply(const Path& p) const;
  std::vector<Step> apply(std::span<const Step> steps) const;

 private:
  std::vector<int> perm_;
  std::vector<int> signs_;
  std::vector<int> code_map_;
};

// All 2^d * d! signed permutations.
std::vector<SignedPermutation> all_signed_permutations(int dimension);

// --- compact keys ------------------------------------------------------------

// Packs up to 16 steps (d <= 8) into 4-bit nibbles, first step lowest.
std::uint64_t encode_steps(std::span<const Step> steps);
std::vector<Step> decode_steps(std::uint64_t key, std::size_t length);

std::string steps_to_string(std::span<const Step> steps);
// Accepts comma or space separated direction codes; empty string = length 0.
std::vector<Step> parse_steps(const std::string& text);

}  // namespace sawlab
