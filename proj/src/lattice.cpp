#include "sawlab/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "sawlab/occupancy.hpp"

namespace sawlab {

namespace {

void check_codes(int dimension, std::span<const Step> steps) {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] >= 2 * dimension) throw BadDirection(i, steps[i], dimension);
  }
}

// Vertex set for walks of bounded extent: packed open addressing when the
// extent fits a 64-bit key, a node-based hash set otherwise.
class VertexSet {
 public:
  VertexSet(int dimension, std::size_t radius, std::size_t max_elements)
      : dimension_(dimension),
        packed_(PointPacker::fits(dimension, static_cast<std::int64_t>(radius))) {
    if (packed_) {
      packer_ = PointPacker(dimension, static_cast<std::int64_t>(radius));
      set_ = OccupancySet(max_elements);
      key_ = packer_.origin();
    } else {
      point_ = LatticePoint(dimension);
    }
  }

  // Inserts the cursor; false when it was already present.
  bool insert_cursor() {
    if (packed_) return set_.insert(key_);
    return fallback_.insert(point_).second;
  }
  bool cursor_taken() const {
    if (packed_) return set_.contains(key_);
    return fallback_.contains(point_);
  }
  void move(int code) {
    if (packed_) {
      key_ = packer_.step(key_, code);
    } else {
      point_.move(code);
    }
  }

 private:
  int dimension_;
  bool packed_;
  PointPacker packer_;
  OccupancySet set_;
  std::uint64_t key_ = 0;
  std::unordered_set<LatticePoint, LatticePointHash> fallback_;
  LatticePoint point_;
};

}  // namespace

LatticePoint LatticePoint::unit(int dimension, int code) {
  LatticePoint p(dimension);
  p.move(code);
  return p;
}

LatticePoint LatticePoint::operator+(const LatticePoint& o) const {
  if (o.dimension() != dimension()) throw DimensionMismatch("point dimensions differ");
  LatticePoint r(*this);
  for (std::size_t i = 0; i < coords_.size(); ++i) r.coords_[i] += o.coords_[i];
  return r;
}

LatticePoint LatticePoint::operator-(const LatticePoint& o) const {
  if (o.dimension() != dimension()) throw DimensionMismatch("point dimensions differ");
  LatticePoint r(*this);
  for (std::size_t i = 0; i < coords_.size(); ++i) r.coords_[i] -= o.coords_[i];
  return r;
}

std::int64_t LatticePoint::norm1() const noexcept {
  std::int64_t s = 0;
  for (auto c : coords_) s += c < 0 ? -c : c;
  return s;
}

std::int64_t LatticePoint::norm2_squared() const noexcept {
  std::int64_t s = 0;
  for (auto c : coords_) s += c * c;
  return s;
}

std::int64_t LatticePoint::max_abs() const noexcept {
  std::int64_t s = 0;
  for (auto c : coords_) s = std::max(s, c < 0 ? -c : c);
  return s;
}

std::string LatticePoint::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(coords_[i]);
  }
  return s + ")";
}

std::size_t LatticePointHash::operator()(const LatticePoint& p) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto c : p.coords()) {
    h ^= static_cast<std::uint64_t>(c) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

// --- Path --------------------------------------------------------------------

Path::Path(int dimension, std::vector<Step> steps)
    : Path(dimension, std::move(steps), LatticePoint(dimension)) {}

Path::Path(int dimension, std::vector<Step> steps, LatticePoint anchor)
    : dimension_(dimension), steps_(std::move(steps)), anchor_(std::move(anchor)) {
  if (dimension < 1) throw DimensionMismatch("dimension must be >= 1");
  if (anchor_.dimension() != dimension) {
    throw DimensionMismatch("anchor dimension differs from path dimension");
  }
  if (auto rep = first_repeat(dimension, steps_)) throw NotSelfAvoiding(*rep);
}

Path Path::trusted(int dimension, std::vector<Step> steps) {
  Path p(dimension);
  p.steps_ = std::move(steps);
  return p;
}

LatticePoint Path::vertex(std::size_t i) const {
  if (i > steps_.size()) throw ShiftOutOfRange("vertex index beyond path length");
  LatticePoint p = anchor_;
  for (std::size_t j = 0; j < i; ++j) p.move(steps_[j]);
  return p;
}

std::vector<LatticePoint> Path::vertices() const {
  std::vector<LatticePoint> out;
  out.reserve(steps_.size() + 1);
  LatticePoint p = anchor_;
  out.push_back(p);
  for (auto s : steps_) out.push_back(p.move(s));
  return out;
}

Path Path::reanchored(LatticePoint anchor) const {
  if (anchor.dimension() != dimension_) throw DimensionMismatch("anchor dimension");
  Path p(*this);
  p.anchor_ = std::move(anchor);
  return p;
}

std::vector<Step> Path::window(std::size_t from, std::size_t to) const {
  if (from > to || to > steps_.size()) throw ShiftOutOfRange("window out of range");
  return {steps_.begin() + static_cast<std::ptrdiff_t>(from),
          steps_.begin() + static_cast<std::ptrdiff_t>(to)};
}

std::string Path::str() const { return "[" + steps_to_string(steps_) + "]"; }

// --- TwoSidedPath ------------------------------------------------------------

TwoSidedPath::TwoSidedPath(Path negative, Path positive)
    : negative_(std::move(negative)), positive_(std::move(positive)) {
  if (negative_.dimension() != positive_.dimension()) {
    throw DimensionMismatch("two-sided path sides differ in dimension");
  }
  negative_ = negative_.reanchored(LatticePoint(dimension()));
  positive_ = positive_.reanchored(LatticePoint(dimension()));
  auto forward = forward_steps();
  if (auto rep = first_repeat(dimension(), forward)) throw NotSelfAvoiding(*rep);
}

LatticePoint TwoSidedPath::vertex(std::int64_t i) const {
  if (i < 0) return negative_.vertex(static_cast<std::size_t>(-i));
  return positive_.vertex(static_cast<std::size_t>(i));
}

std::vector<Step> TwoSidedPath::forward_steps() const {
  std::vector<Step> out;
  out.reserve(length());
  auto neg = negative_.steps();
  for (std::size_t j = neg.size(); j-- > 0;) {
    out.push_back(static_cast<Step>(reverse_of(neg[j])));
  }
  auto pos = positive_.steps();
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

// --- operations --------------------------------------------------------------

std::optional<std::size_t> first_repeat(int dimension,
                                        std::span<const Step> steps) {
  check_codes(dimension, steps);
  VertexSet seen(dimension, steps.size(), steps.size() + 1);
  seen.insert_cursor();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    seen.move(steps[i]);
    if (!seen.insert_cursor()) return i + 1;
  }
  return std::nullopt;
}

Path validate(std::span<const Step> raw_steps, int dimension) {
  return Path(dimension, std::vector<Step>(raw_steps.begin(), raw_steps.end()));
}

Path shift(const Path& path, std::size_t m) {
  if (m > path.length()) {
    throw ShiftOutOfRange("shift " + std::to_string(m) + " exceeds length " +
                          std::to_string(path.length()));
  }
  return Path::trusted(path.dimension(), path.window(m, path.length()));
}

TwoSidedPath shift(const TwoSidedPath& path, std::size_t m) {
  if (m > path.positive_length()) {
    throw ShiftOutOfRange("shift exceeds positive side length");
  }
  auto pos = path.positive().steps();
  std::vector<Step> neg;
  neg.reserve(path.negative_length() + m);
  for (std::size_t j = m; j-- > 0;) neg.push_back(static_cast<Step>(reverse_of(pos[j])));
  auto old_neg = path.negative().steps();
  neg.insert(neg.end(), old_neg.begin(), old_neg.end());
  int d = path.dimension();
  return TwoSidedPath(Path::trusted(d, std::move(neg)),
                      Path::trusted(d, path.positive().window(m, pos.size())));
}

bool escapes_steps(int dimension, std::span<const Step> tail,
                   std::span<const Step> head) {
  check_codes(dimension, tail);
  check_codes(dimension, head);
  VertexSet seen(dimension, head.size() + tail.size(), head.size() + 1);
  seen.insert_cursor();
  for (auto s : head) {
    seen.move(s);
    seen.insert_cursor();
  }
  for (auto s : tail) {
    seen.move(s);
    if (seen.cursor_taken()) return false;
  }
  return true;
}

bool escapes(const Path& tail, const Path& head) {
  if (tail.dimension() != head.dimension()) {
    throw DimensionMismatch("escapes: dimensions differ");
  }
  return escapes_steps(head.dimension(), tail.steps(), head.steps());
}

std::optional<Path> try_concat(const Path& first, const Path& second) {
  if (first.dimension() != second.dimension()) {
    throw DimensionMismatch("concat: dimensions differ");
  }
  if (!escapes(second, first)) return std::nullopt;
  std::vector<Step> steps(first.steps().begin(), first.steps().end());
  steps.insert(steps.end(), second.steps().begin(), second.steps().end());
  Path out = Path::trusted(first.dimension(), std::move(steps));
  return out.reanchored(first.anchor());
}

Path concat(const Path& first, const Path& second) {
  if (auto p = try_concat(first, second)) return *std::move(p);
  // Locate the repeat for the error message.
  std::vector<Step> steps(first.steps().begin(), first.steps().end());
  steps.insert(steps.end(), second.steps().begin(), second.steps().end());
  throw NotSelfAvoiding(first_repeat(first.dimension(), steps).value_or(0));
}

std::size_t count_occurrences(std::span<const Step> walk,
                              std::span<const Step> pattern) noexcept {
  if (pattern.size() > walk.size()) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + pattern.size() <= walk.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), walk.begin() + static_cast<std::ptrdiff_t>(i))) {
      ++count;
    }
  }
  return count;
}

std::vector<std::size_t> occurrence_positions(std::span<const Step> walk,
                                              std::span<const Step> pattern) {
  std::vector<std::size_t> out;
  if (pattern.size() > walk.size()) return out;
  for (std::size_t i = 0; i + pattern.size() <= walk.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), walk.begin() + static_cast<std::ptrdiff_t>(i))) {
      out.push_back(i);
    }
  }
  return out;
}

Rational pattern_density(const Path& walk, const Path& pattern) {
  if (walk.dimension() != pattern.dimension()) {
    throw DimensionMismatch("pattern_density: dimensions differ");
  }
  if (pattern.empty()) throw PatternLongerThanPath("pattern must have at least one step");
  if (pattern.length() > walk.length()) {
    throw PatternLongerThanPath("pattern of length " + std::to_string(pattern.length()) +
                                " exceeds walk length " + std::to_string(walk.length()));
  }
  return Rational(static_cast<long long>(count_occurrences(walk.steps(), pattern.steps())),
                  static_cast<long long>(walk.length()));
}

// --- symmetries --------------------------------------------------------------

SignedPermutation::SignedPermutation(std::vector<int> perm, std::vector<int> signs)
    : perm_(std::move(perm)), signs_(std::move(signs)) {
  int d = static_cast<int>(perm_.size());
  if (static_cast<int>(signs_.size()) != d) throw DimensionMismatch("signed permutation sizes");
  code_map_.resize(2 * d);
  for (int a = 0; a < d; ++a) {
    int target = perm_[a];
    bool flip = signs_[a] < 0;
    code_map_[plus(a)] = flip ? minus(target) : plus(target);
    code_map_[minus(a)] = flip ? plus(target) : minus(target);
  }
}

SignedPermutation SignedPermutation::identity(int dimension) {
  std::vector<int> perm(dimension);
  std::iota(perm.begin(), perm.end(), 0);
  return {perm, std::vector<int>(dimension, 1)};
}

LatticePoint SignedPermutation::apply(const LatticePoint& p) const {
  std::vector<std::int64_t> out(p.dimension(), 0);
  for (int a = 0; a < p.dimension(); ++a) out[perm_[a]] = signs_[a] * p[a];
  return LatticePoint(std::move(out));
}

std::vector<Step> SignedPermutation::apply(std::span<const Step> steps) const {
  std::vector<Step> out;
  out.reserve(steps.size());
  for (auto s : steps) out.push_back(static_cast<Step>(code_map_[s]));
  return out;
}

Path SignedPermutation::apply(const Path& p) const {
  if (p.dimension() != dimension()) throw DimensionMismatch("symmetry dimension");
  return Path::trusted(p.dimension(), apply(p.steps())).reanchored(apply(p.anchor()));
}

std::vector<SignedPermutation> all_signed_permutations(int dimension) {
  std::vector<SignedPermutation> out;
  std::vector<int> perm(dimension);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (unsigned mask = 0; mask < (1u << dimension); ++mask) {
      std::vector<int> signs(dimension);
      for (int a = 0; a < dimension; ++a) signs[a] = (mask >> a) & 1u ? -1 : 1;
      out.emplace_back(perm, signs);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// --- compact keys ------------------------------------------------------------

std::uint64_t encode_steps(std::span<const Step> steps) {
  if (steps.size() > 16) throw BudgetExceeded("encode_steps supports at most 16 steps");
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] >= 16) throw BadDirection(i, steps[i], 8);
    key |= static_cast<std::uint64_t>(steps[i]) << (4 * i);
  }
  return key;
}

std::vector<Step> decode_steps(std::uint64_t key, std::size_t length) {
  std::vector<Step> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = static_cast<Step>((key >> (4 * i)) & 0xF);
  return out;
}

std::string steps_to_string(std::span<const Step> steps) {
  std::string s;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(steps[i]);
  }
  return s;
}

std::vector<Step> parse_steps(const std::string& text) {
  std::vector<Step> out;
  std::string token;
  std::istringstream in(text);
  auto flush = [&] {
    if (token.empty()) return;
    int code = 0;
    if (token[0] == '+' || token[0] == '-') {
      // symbolic form: +e1, -e3
      if (token.size() < 3 || token[1] != 'e') throw UsageError("bad step token '" + token + "'");
      int axis = std::stoi(token.substr(2)) - 1;
      if (axis < 0) throw UsageError("bad step token '" + token + "'");
      code = token[0] == '+' ? plus(axis) : minus(axis);
    } else {
      try {
        code = std::stoi(token);
      } catch (const std::exception&) {
        throw UsageError("bad step token '" + token + "'");
      }
    }
    if (code < 0 || code > 255) throw UsageError("bad step token '" + token + "'");
    out.push_back(static_cast<Step>(code));
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ' ' || c == ';' || c == '[' || c == ']') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return out;
}

}  // namespace sawlab
