#include "sawlab/enumerate.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "sawlab/detail/walker.hpp"
#include "sawlab/parallel.hpp"
#include "sawlab/store.hpp"

namespace sawlab {

namespace detail {

std::vector<std::vector<Step>> extension_prefixes(int dimension,
                                                  std::span<const Step> base,
                                                  int depth, std::int64_t radius) {
  Walker w(dimension, radius, base.size() + static_cast<std::size_t>(depth) + 1);
  w.push_all(base);
  std::vector<std::vector<Step>> out;
  auto leaf = [&](Walker& walker) {
    auto s = walker.steps();
    out.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(base.size()), s.end());
  };
  w.visit(depth, leaf);
  return out;
}

}  // namespace detail

namespace {

using detail::BudgetAbort;
using detail::NodeBudget;
using detail::Walker;
using json = nlohmann::json;

std::string hex_bitmap(const std::vector<std::uint8_t>& done) {
  static const char* digits = "0123456789abcdef";
  std::string out((done.size() + 3) / 4, '0');
  for (std::size_t i = 0; i < done.size(); ++i) {
    if (done[i]) {
      auto& ch = out[i / 4];
      int v = (ch <= '9' ? ch - '0' : ch - 'a' + 10) | (1 << (i % 4));
      ch = digits[v];
    }
  }
  return out;
}

std::vector<std::uint8_t> parse_bitmap(const std::string& hex, std::size_t n) {
  std::vector<std::uint8_t> done(n, 0);
  for (std::size_t i = 0; i < n && i / 4 < hex.size(); ++i) {
    char ch = hex[i / 4];
    int v = ch <= '9' ? ch - '0' : ch - 'a' + 10;
    done[i] = static_cast<std::uint8_t>((v >> (i % 4)) & 1);
  }
  return done;
}

// Runs `count` independent tasks, each producing `width` 64-bit partial
// results. Honors the node budget and resumes from / writes checkpoints.
class TaskRunner {
 public:
  TaskRunner(const EnumOptions& options, std::string job, std::size_t count,
             std::size_t width)
      : options_(options),
        job_(std::move(job)),
        count_(count),
        width_(width),
        results_(count * width, 0),
        done_(count, 0),
        budget_(options.node_limit) {
    load_checkpoint();
  }

  template <class Fn>
  std::vector<std::uint64_t> run(Fn&& fn) {
    std::atomic<bool> aborted{false};
    parallel_for(count_, options_.workers, [&](std::size_t i) {
      {
        std::lock_guard lock(mutex_);
        if (done_[i]) return;
      }
      if (aborted.load()) return;
      std::vector<std::uint64_t> local(width_, 0);
      try {
        fn(i, budget_, std::span<std::uint64_t>(local));
      } catch (const BudgetAbort&) {
        aborted.store(true);
        return;
      }
      std::lock_guard lock(mutex_);
      std::copy(local.begin(), local.end(),
                results_.begin() + static_cast<std::ptrdiff_t>(i * width_));
      done_[i] = 1;
      if (!options_.checkpoint_path.empty() &&
          ++since_checkpoint_ >= options_.checkpoint_every) {
        write_checkpoint();
        since_checkpoint_ = 0;
      }
    });
    if (aborted.load()) {
      std::size_t completed = 0;
      for (auto d : done_) completed += d;
      std::string where;
      if (!options_.checkpoint_path.empty()) {
        write_checkpoint();
        where = "; checkpoint written to " + options_.checkpoint_path;
      }
      throw BudgetExceeded("node limit " + std::to_string(options_.node_limit) +
                           " exceeded for " + job_ + " after " +
                           std::to_string(completed) + "/" + std::to_string(count_) +
                           " tasks" + where);
    }
    if (!options_.checkpoint_path.empty()) {
      std::error_code ec;
      std::filesystem::remove(options_.checkpoint_path, ec);
    }
    return results_;
  }

 private:
  void write_checkpoint() {
    json j;
    j["job"] = job_;
    j["tasks"] = count_;
    j["width"] = width_;
    j["completed"] = hex_bitmap(done_);
    json partial = json::object();
    for (std::size_t i = 0; i < count_; ++i) {
      if (!done_[i]) continue;
      json row = json::array();
      for (std::size_t w = 0; w < width_; ++w) row.push_back(std::to_string(results_[i * width_ + w]));
      partial[std::to_string(i)] = row;
    }
    j["partial"] = partial;
    std::string tmp = options_.checkpoint_path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, options_.checkpoint_path);
  }

  void load_checkpoint() {
    if (options_.checkpoint_path.empty() ||
        !std::filesystem::exists(options_.checkpoint_path)) {
      return;
    }
    std::ifstream in(options_.checkpoint_path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("job", "") != job_ ||
        j.value("tasks", std::size_t{0}) != count_ ||
        j.value("width", std::size_t{0}) != width_) {
      return;  // belongs to another job
    }
    done_ = parse_bitmap(j.value("completed", ""), count_);
    const auto& partial = j["partial"];
    for (std::size_t i = 0; i < count_; ++i) {
      if (!done_[i]) continue;
      auto it = partial.find(std::to_string(i));
      if (it == partial.end()) {
        done_[i] = 0;
        continue;
      }
      for (std::size_t w = 0; w < width_; ++w) {
        results_[i * width_ + w] = std::stoull((*it)[w].get<std::string>());
      }
    }
  }

  const EnumOptions& options_;
  std::string job_;
  std::size_t count_;
  std::size_t width_;
  std::vector<std::uint64_t> results_;
  std::vector<std::uint8_t> done_;
  NodeBudget budget_;
  std::mutex mutex_;
  std::size_t since_checkpoint_ = 0;
};

BigCount sum_column(const std::vector<std::uint64_t>& results, std::size_t width,
                    std::size_t column) {
  BigCount total = 0;
  for (std::size_t i = column; i < results.size(); i += width) total += results[i];
  return total;
}

void check_dimension(int d) {
  if (d < 1 || d > 8) throw InvalidArgument("dimension must be in [1, 8]");
}

void check_length(int n) {
  if (n < 0) throw InvalidArgument("length must be nonnegative");
}

std::string job_name(const std::string& kind, int d, int n, const std::string& key,
                     const EnumOptions& opt) {
  return kind + "|d=" + std::to_string(d) + "|n=" + std::to_string(n) + "|" + key +
         "|split=" + std::to_string(opt.split_depth);
}

}  // namespace

std::string to_string(CountKind kind) {
  switch (kind) {
    case CountKind::plain: return "plain";
    case CountKind::end: return "end";
    case CountKind::prefix: return "prefix";
    case CountKind::two_sided: return "two_sided";
  }
  return "plain";
}

CountKind count_kind_from_string(const std::string& s) {
  if (s == "plain") return CountKind::plain;
  if (s == "end") return CountKind::end;
  if (s == "prefix") return CountKind::prefix;
  if (s == "two_sided") return CountKind::two_sided;
  throw InvalidArgument("unknown count kind '" + s + "'");
}

std::string end_condition(const LatticePoint& x) {
  std::string s = "x=";
  for (int i = 0; i < x.dimension(); ++i) {
    if (i) s += ",";
    s += std::to_string(x[i]);
  }
  return s;
}

std::string prefix_condition(std::span<const Step> zeta) {
  return "z=" + steps_to_string(zeta);
}

std::string two_sided_condition(int m, const TwoSidedPath& xi) {
  return "m=" + std::to_string(m) + ";neg=" + steps_to_string(xi.negative().steps()) +
         ";pos=" + steps_to_string(xi.positive().steps());
}

// --- CountTable --------------------------------------------------------------

std::optional<BigCount> CountTable::get(CountKind kind, int n, const std::string& key) const {
  auto it = entries_.find(CountKey{dimension_, kind, n, key});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CountTable::put(CountKind kind, int n, const std::string& key, const BigCount& value) {
  if (value < 0) throw InvalidArgument("counts are nonnegative");
  entries_[CountKey{dimension_, kind, n, key}] = value;
}

std::map<int, BigCount> CountTable::plain_counts() const {
  std::map<int, BigCount> out;
  for (const auto& [k, v] : entries_) {
    if (k.kind == CountKind::plain) out[k.n] = v;
  }
  return out;
}

std::vector<std::pair<int, int>> CountTable::submultiplicativity_violations() const {
  auto plain = plain_counts();
  std::vector<std::pair<int, int>> bad;
  for (const auto& [a, ca] : plain) {
    for (const auto& [b, cb] : plain) {
      if (b < a) continue;
      auto it = plain.find(a + b);
      if (it != plain.end() && it->second > ca * cb) bad.emplace_back(a, b);
    }
  }
  return bad;
}

// --- Enumerator --------------------------------------------------------------

Enumerator::Enumerator(EnumOptions options) : options_(std::move(options)) {}

const CountTable& Enumerator::table(int d) {
  std::lock_guard lock(mutex_);
  return tables_.try_emplace(d, d).first->second;
}

std::optional<BigCount> Enumerator::lookup(const CountKey& key) {
  {
    std::lock_guard lock(mutex_);
    auto& t = tables_.try_emplace(key.d, key.d).first->second;
    if (auto v = t.get(key.kind, key.n, key.key)) return v;
  }
  if (cache_ != nullptr) {
    if (auto v = cache_->get(key)) {
      std::lock_guard lock(mutex_);
      tables_.try_emplace(key.d, key.d).first->second.put(key.kind, key.n, key.key, *v);
      return v;
    }
  }
  return std::nullopt;
}

void Enumerator::store(const CountKey& key, const BigCount& value) {
  {
    std::lock_guard lock(mutex_);
    tables_.try_emplace(key.d, key.d).first->second.put(key.kind, key.n, key.key, value);
  }
  if (cache_ != nullptr) cache_->put(key, value);
}

BigCount Enumerator::count_saws(int d, int n) {
  check_dimension(d);
  check_length(n);
  CountKey key{d, CountKind::plain, n, ""};
  if (auto v = lookup(key)) return *v;
  BigCount result = 1;
  if (n > 0) {
    bool sym = options_.symmetry_reduction;
    int split = std::min(std::max(options_.split_depth, sym ? 1 : 0), n);
    auto prefixes = detail::extension_prefixes(d, {}, split, n);
    if (sym) {
      // Keep the prefixes whose first step is +e1; the rest are images of
      // these under the 2d axis symmetries.
      std::erase_if(prefixes, [](const auto& p) { return p.front() != 0; });
    }
    TaskRunner runner(options_, job_name(sym ? "plain-sym" : "plain", d, n, "", options_),
                      prefixes.size(), 1);
    auto results = runner.run([&](std::size_t i, NodeBudget& budget, std::span<std::uint64_t> out) {
      Walker w(d, n, static_cast<std::size_t>(n) + 1, &budget);
      w.push_all(prefixes[i]);
      out[0] = w.count(n - split);
      w.settle();
    });
    result = sum_column(results, 1, 0);
    if (sym) result *= 2 * d;
  }
  store(key, result);
  return result;
}

BigCount Enumerator::count_ending_at(int d, int n, const LatticePoint& x) {
  check_dimension(d);
  check_length(n);
  if (x.dimension() != d) throw DimensionMismatch("endpoint dimension differs from d");
  CountKey key{d, CountKind::end, n, end_condition(x)};
  if (auto v = lookup(key)) return *v;
  BigCount result = 0;
  std::int64_t reach = x.norm1();
  if (reach <= n && (n - reach) % 2 == 0) {
    if (n == 0) {
      result = 1;
    } else {
      int split = std::min(options_.split_depth, n);
      auto prefixes = detail::extension_prefixes(d, {}, split, n);
      std::vector<std::int64_t> target(x.coords().begin(), x.coords().end());
      TaskRunner runner(options_, job_name("end", d, n, key.key, options_), prefixes.size(), 1);
      auto results = runner.run([&](std::size_t i, NodeBudget& budget, std::span<std::uint64_t> out) {
        Walker w(d, n, static_cast<std::size_t>(n) + 1, &budget);
        w.push_all(prefixes[i]);
        std::vector<std::int64_t> pos(d, 0);
        for (auto s : prefixes[i]) pos[axis_of(s)] += sign_of(s);
        std::int64_t dist = 0;
        for (int a = 0; a < d; ++a) dist += std::abs(target[a] - pos[a]);
        const std::uint64_t target_key = w.packer().pack(target);
        auto rec = [&](auto&& self, int remaining) -> std::uint64_t {
          if (remaining == 0) return w.cursor() == target_key ? 1 : 0;
          if (dist > remaining) return 0;
          w.tick();
          std::uint64_t total = 0;
          for (int c = 0; c < 2 * d; ++c) {
            if (!w.is_free(c)) continue;
            int a = axis_of(c);
            std::int64_t before = std::abs(target[a] - pos[a]);
            pos[a] += sign_of(c);
            std::int64_t delta = std::abs(target[a] - pos[a]) - before;
            dist += delta;
            w.push(c);
            total += self(self, remaining - 1);
            w.pop();
            dist -= delta;
            pos[a] -= sign_of(c);
          }
          return total;
        };
        out[0] = rec(rec, n - split);
        w.settle();
      });
      result = sum_column(results, 1, 0);
    }
  }
  store(key, result);
  return result;
}

BigCount Enumerator::count_extensions(int d, int n, const Path& zeta) {
  check_dimension(d);
  check_length(n);
  if (zeta.dimension() != d) throw DimensionMismatch("prefix dimension differs from d");
  auto k = static_cast<int>(zeta.length());
  if (k > n) throw InvalidArgument("prefix longer than the requested length");
  if (k == 0) return count_saws(d, n);
  CountKey key{d, CountKind::prefix, n, prefix_condition(zeta.steps())};
  if (auto v = lookup(key)) return *v;
  int rest = n - k;
  int split = std::min(options_.split_depth, rest);
  auto prefixes = detail::extension_prefixes(d, zeta.steps(), split, n);
  TaskRunner runner(options_, job_name("prefix", d, n, key.key, options_), prefixes.size(), 1);
  auto results = runner.run([&](std::size_t i, NodeBudget& budget, std::span<std::uint64_t> out) {
    Walker w(d, n, static_cast<std::size_t>(n) + 1, &budget);
    w.push_all(zeta.steps());
    w.push_all(prefixes[i]);
    out[0] = w.count(rest - split);
    w.settle();
  });
  BigCount result = sum_column(results, 1, 0);
  store(key, result);
  return result;
}

BigCount Enumerator::count_two_sided(int d, int m, int n, const TwoSidedPath& xi) {
  check_dimension(d);
  check_length(m);
  check_length(n);
  if (xi.dimension() != d) throw DimensionMismatch("two-sided pattern dimension differs from d");
  auto neg_len = static_cast<int>(xi.negative_length());
  auto pos_len = static_cast<int>(xi.positive_length());
  if (neg_len > m || pos_len > n) {
    throw InvalidArgument("two-sided pattern does not fit inside [-m, n]");
  }
  CountKey key{d, CountKind::two_sided, n, two_sided_condition(m, xi)};
  if (auto v = lookup(key)) return *v;
  int pos_rest = n - pos_len;
  int neg_rest = m - neg_len;
  int radius = std::max(std::max(m, n), 1);
  std::size_t capacity = static_cast<std::size_t>(m + n) + 1;

  // Positive-side extension prefixes, built on top of the full pattern.
  int split = std::min(options_.split_depth, pos_rest);
  std::vector<std::vector<Step>> prefixes;
  std::uint64_t neg_end = 0;
  {
    Walker probe(d, radius, capacity);
    probe.push_all(xi.negative().steps());
    neg_end = probe.cursor();
    probe.set_cursor(probe.packer().origin());
    probe.push_all(xi.positive().steps());
    auto collect = [&](Walker& w) {
      auto s = w.steps();
      prefixes.emplace_back(s.end() - split, s.end());
    };
    probe.visit(split, collect);
  }
  TaskRunner runner(options_, job_name("two_sided", d, n, key.key, options_), prefixes.size(), 1);
  auto results = runner.run([&](std::size_t i, NodeBudget& budget, std::span<std::uint64_t> out) {
    Walker w(d, radius, capacity, &budget);
    w.push_all(xi.negative().steps());
    w.set_cursor(w.packer().origin());
    w.push_all(xi.positive().steps());
    w.push_all(prefixes[i]);
    std::uint64_t total = 0;
    auto leaf = [&](Walker& walker) {
      std::uint64_t pos_end = walker.cursor();
      walker.set_cursor(neg_end);
      total += walker.count(neg_rest);
      walker.set_cursor(pos_end);
    };
    w.visit(pos_rest - split, leaf);
    out[0] = total;
    w.settle();
  });
  BigCount result = sum_column(results, 1, 0);
  store(key, result);
  return result;
}

double Enumerator::truncated_two_point(int d, const LatticePoint& x, int max_length, double mu) {
  if (!(mu > 0)) throw InvalidArgument("mu_hat must be positive");
  check_length(max_length);
  long double total = 0;
  for (int n = 0; n <= max_length; ++n) {
    BigCount c = count_ending_at(d, n, x);
    if (c == 0) continue;
    total += static_cast<long double>(to_double(c)) * std::pow(static_cast<long double>(mu), -n);
  }
  return static_cast<double>(total);
}

std::vector<AsymptoticRow> Enumerator::asymptotic_table(int d, int n_max) {
  check_length(n_max);
  std::vector<BigCount> c;
  for (int n = 0; n <= n_max; ++n) c.push_back(count_saws(d, n));
  std::vector<AsymptoticRow> rows;
  for (int n = 0; n <= n_max; ++n) {
    AsymptoticRow row;
    row.n = n;
    row.count = c[n];
    if (n >= 1 && c[n - 1] > 0) {
      Rational ratio(c[n], c[n - 1]);
      row.ratio = ratio;
      double r = to_double(ratio);
      row.root = std::pow(to_double(c[n]), 1.0 / n);
      row.amplitude = std::exp(std::log(to_double(c[n])) - n * std::log(r));
    }
    if (2 * n <= n_max && c[n] > 0) row.nonintersection = Rational(c[2 * n], c[n] * c[n]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- listing -----------------------------------------------------------------

namespace {

std::vector<Step> collect(int d, int n, std::span<const Step> head, std::size_t max_paths) {
  if (n < 0) throw InvalidArgument("length must be nonnegative");
  auto k = head.size();
  Walker w(d, static_cast<std::int64_t>(k) + n, k + static_cast<std::size_t>(n) + 1);
  w.push_all(head);
  std::vector<Step> out;
  std::size_t produced = 0;
  auto leaf = [&](Walker& walker) {
    if (++produced > max_paths) {
      throw BudgetExceeded("listing exceeds " + std::to_string(max_paths) + " paths");
    }
    auto s = walker.steps();
    out.insert(out.end(), s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
  };
  w.visit(n, leaf);
  return out;
}

}  // namespace

std::vector<Step> list_saws(int d, int n, std::size_t max_paths) {
  check_dimension(d);
  return collect(d, n, {}, max_paths);
}

std::vector<Step> list_escapers(int d, int n, std::span<const Step> head, std::size_t max_paths) {
  check_dimension(d);
  return collect(d, n, head, max_paths);
}

void for_each_saw(int d, int n, const std::function<void(std::span<const Step>)>& fn) {
  for_each_escaper(d, n, {}, fn);
}

void for_each_escaper(int d, int n, std::span<const Step> head,
                      const std::function<void(std::span<const Step>)>& fn) {
  check_dimension(d);
  check_length(n);
  auto k = head.size();
  Walker w(d, static_cast<std::int64_t>(k) + n, k + static_cast<std::size_t>(n) + 1);
  w.push_all(head);
  auto leaf = [&](Walker& walker) { fn(walker.steps().subspan(k)); };
  w.visit(n, leaf);
}

bool has_escaper(int d, int n, std::span<const Step> head, std::uint64_t node_limit) {
  check_dimension(d);
  check_length(n);
  auto k = head.size();
  NodeBudget budget(node_limit);
  Walker w(d, static_cast<std::int64_t>(k) + n, k + static_cast<std::size_t>(n) + 1,
           node_limit ? &budget : nullptr);
  w.push_all(head);
  try {
    return w.any(n);
  } catch (const BudgetAbort&) {
    throw BudgetExceeded("escaper search exceeded node limit " + std::to_string(node_limit));
  }
}

}  // namespace sawlab
