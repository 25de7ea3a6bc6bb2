#include "sawlab/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sawlab/coupling.hpp"
#include "sawlab/enumerate.hpp"
#include "sawlab/parallel.hpp"
#include "sawlab/patterns.hpp"
#include "sawlab/sampler.hpp"
#include "sawlab/spectral.hpp"
#include "sawlab/store.hpp"
#include "sawlab/verify.hpp"

namespace sawlab {

namespace {

using json = nlohmann::ordered_json;
using Steps = std::vector<Step>;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::int64_t> parse_ints(const std::string& text) {
  std::vector<std::int64_t> out;
  if (text.empty()) return out;
  for (const auto& part : split(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("expected a comma separated integer list, got '" + text + "'");
    }
  }
  return out;
}

std::pair<int, int> parse_pair(const std::string& text) {
  auto v = parse_ints(text);
  if (v.size() != 2) throw UsageError("expected two integers 'm,n', got '" + text + "'");
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

// "neg/pos": two step lists for a two-sided middle.
TwoSidedPath parse_middle(int d, const std::string& text) {
  auto parts = split(text, '/');
  if (parts.size() != 2) throw UsageError("two-sided middle must look like 'neg/pos', got '" + text + "'");
  return TwoSidedPath(Path(d, parse_steps(parts[0])), Path(d, parse_steps(parts[1])));
}

std::string rational_text(const Rational& r) {
  return to_decimal(numerator(r)) + "/" + to_decimal(denominator(r));
}

std::string decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Context {
  RunConfig cfg;
  std::uint64_t trials = 0;  // 0 = command default
  std::uint64_t stream = 0;
  std::string cache_flag;
  std::ostream& out;
  std::ostream& err;

  std::uint64_t trials_or(std::uint64_t fallback) const { return trials ? trials : fallback; }

  EnumOptions enum_options() const {
    EnumOptions o;
    o.workers = cfg.workers;
    o.node_limit = cfg.node_limit;
    return o;
  }

  SamplerConfig sampler_config(int base = 0) const {
    return SamplerConfig{.seed = cfg.seed, .base_length = base, .max_rejections = cfg.rejection_cap, .stream_id = stream};
  }

  std::string cache_path() const { return cache_flag.empty() ? resolve_cache_path(cfg.cache_path) : cache_flag; }

  std::string artifact(const std::string& stem, const std::string& ext, const std::string& content) const {
    auto path = write_versioned_artifact(cfg.output_dir, stem, ext, content);
    err << "wrote " << path << '\n';
    return path;
  }
};

// Enumerator backed by the persistent cache for the life of one command.
struct CachedEnumerator {
  CountCache cache;
  Enumerator enumerator;

  explicit CachedEnumerator(const Context& ctx) : cache(ctx.cache_path()), enumerator(ctx.enum_options()) {
    enumerator.attach_cache(&cache);
    for (const auto& w : cache.warnings()) ctx.err << "warning: " << w << '\n';
  }
};

// --- commands ----------------------------------------------------------------

struct CountArgs {
  int n = -1;
  std::string end, prefix, two_sided, middle;
};

int cmd_count(Context& ctx, const CountArgs& a) {
  const int d = ctx.cfg.d;
  CachedEnumerator ce(ctx);
  auto& e = ce.enumerator;
  json j;
  j["d"] = d;
  j["n"] = a.n;
  BigCount value;
  if (!a.two_sided.empty()) {
    int m = std::stoi(a.two_sided);
    TwoSidedPath xi = a.middle.empty() ? TwoSidedPath(d) : parse_middle(d, a.middle);
    value = e.count_two_sided(d, m, a.n, xi);
    j["kind"] = "two_sided";
    j["m"] = m;
    j["condition"] = two_sided_condition(m, xi);
  } else if (!a.end.empty()) {
    LatticePoint x(parse_ints(a.end));
    value = e.count_ending_at(d, a.n, x);
    j["kind"] = "end";
    j["condition"] = end_condition(x);
  } else if (!a.prefix.empty()) {
    Path zeta(d, parse_steps(a.prefix));
    value = e.count_extensions(d, a.n, zeta);
    j["kind"] = "prefix";
    j["condition"] = prefix_condition(zeta.steps());
  } else {
    value = e.count_saws(d, a.n);
    j["kind"] = "plain";
  }
  j["count"] = to_decimal(value);
  ctx.out << to_decimal(value) << '\n';
  ctx.artifact("count", "json", j.dump(2) + "\n");
  return 0;
}

struct TwoPointArgs {
  std::string x;
  int max_length = 10;
  double mu = 0;
};

int cmd_twopoint(Context& ctx, const TwoPointArgs& a) {
  CachedEnumerator ce(ctx);
  LatticePoint x(parse_ints(a.x));
  double v = ce.enumerator.truncated_two_point(ctx.cfg.d, x, a.max_length, a.mu);
  json j;
  j["d"] = ctx.cfg.d;
  j["x"] = std::vector<std::int64_t>(x.coords().begin(), x.coords().end());
  j["max_length"] = a.max_length;
  j["mu"] = a.mu;
  j["value"] = v;
  ctx.out << decimal(v) << '\n';
  ctx.artifact("twopoint", "json", j.dump(2) + "\n");
  return 0;
}

int cmd_table(Context& ctx, int n_max) {
  CachedEnumerator ce(ctx);
  auto rows = ce.enumerator.asymptotic_table(ctx.cfg.d, n_max);
  std::ostringstream csv;
  csv << "n,count,ratio,root,amplitude,nonintersection\n";
  for (const auto& r : rows) {
    csv << r.n << ',' << to_decimal(r.count) << ',' << (r.ratio ? decimal(to_double(*r.ratio)) : "") << ','
        << (r.root ? decimal(*r.root) : "") << ',' << (r.amplitude ? decimal(*r.amplitude) : "") << ','
        << (r.nonintersection ? decimal(to_double(*r.nonintersection)) : "") << '\n';
  }
  ctx.out << csv.str();
  ctx.artifact("table_d" + std::to_string(ctx.cfg.d), "csv", csv.str());
  return 0;
}

struct FixedPointArgs {
  int n = -1;
  bool no_trim = false;
  double tol = 1e-12;
  int starts = 2;
  int compare = 0;
  std::size_t top = 10;
  std::size_t max_paths = 200'000;
};

int cmd_fixedpoint(Context& ctx, const FixedPointArgs& a) {
  EscapeMatrixLimits limits;
  limits.max_paths = a.max_paths;
  limits.workers = ctx.cfg.workers;
  EscapeMatrix m = build_escape_matrix(ctx.cfg.d, a.n, !a.no_trim, limits);
  PerronOptions po;
  po.tol = a.tol;
  po.random_starts = a.starts;
  po.seed = ctx.cfg.seed;
  po.workers = ctx.cfg.workers;
  FixedPoint fp = perron_fixed_point(m, po);
  auto report = json::parse(fixed_point_report_json(m, fp, a.top));
  report["symmetry_defect"] = symmetry_defect(m, fp.full_values);
  if (a.compare > 0) {
    auto cmp = compare_to_marginal(m, fp.full_values, a.compare, ctx.cfg.workers);
    report["marginal_m"] = cmp.m;
    report["marginal_tv"] = cmp.tv_distance;
    std::ostringstream csv;
    csv << "path_index,steps,fixed_point,marginal\n";
    for (const auto& r : cmp.rows) {
      csv << r.index << ',' << steps_to_string(r.steps) << ',' << decimal(r.fixed_point) << ',' << decimal(r.marginal)
          << '\n';
    }
    ctx.artifact("marginal_d" + std::to_string(ctx.cfg.d) + "_n" + std::to_string(a.n), "csv", csv.str());
  }
  std::string text = report.dump(2) + "\n";
  ctx.out << text;
  std::string stem = "fixedpoint_d" + std::to_string(ctx.cfg.d) + "_n" + std::to_string(a.n);
  ctx.artifact(stem, "json", text);
  ctx.artifact(stem, "csv", fixed_point_csv(m, fp));
  return 0;
}

struct SampleArgs {
  int n = -1;
  int base = 0;
  std::string prefix, escape;
  int two_sided = -1;
};

std::string corpus_bytes(const Context& ctx, const std::vector<std::pair<int, Steps>>& records) {
  namespace fs = std::filesystem;
  fs::create_directories(ctx.cfg.output_dir);
  fs::path tmp = fs::path(ctx.cfg.output_dir) / ".corpus.partial";
  {
    CorpusWriter w(tmp.string());
    for (const auto& [d, s] : records) w.write(d, s);
    w.close();
  }
  std::ifstream in(tmp, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  fs::remove(tmp);
  return bytes;
}

int cmd_sample(Context& ctx, const SampleArgs& a) {
  const int d = ctx.cfg.d;
  const std::uint64_t trials = ctx.trials_or(1000);
  SawSampler sampler(d, ctx.sampler_config(a.base));
  std::vector<Steps> walks(trials);
  std::vector<SampleStats> stats(trials);
  std::string mode = "uniform";
  if (!a.prefix.empty()) mode = "prefix";
  if (!a.escape.empty()) mode = "escape";
  if (a.two_sided >= 0) mode = "two_sided";
  const Path zeta(d, parse_steps(!a.prefix.empty() ? a.prefix : a.escape));

  parallel_for(trials, ctx.cfg.workers, [&](std::size_t i) {
    Rng rng = sampler.stream(i);
    if (mode == "uniform") {
      walks[i] = sampler.uniform_steps(a.n, rng, &stats[i]);
    } else if (mode == "prefix") {
      auto p = sampler.sample_prefix_conditioned(a.n, zeta, rng, &stats[i]);
      walks[i].assign(p.steps().begin(), p.steps().end());
    } else if (mode == "escape") {
      walks[i] = sampler.escaping_steps(a.n, zeta.steps(), rng, &stats[i]);
    } else {
      walks[i] = sampler.sample_two_sided(a.two_sided, a.n, rng, &stats[i]).forward_steps();
    }
  });

  SampleStats total;
  RunningStats msd;
  std::vector<std::pair<int, Steps>> records;
  records.reserve(trials);
  for (std::uint64_t i = 0; i < trials; ++i) {
    total += stats[i];
    msd.add(static_cast<double>(Path::trusted(d, walks[i]).endpoint().norm2_squared()));
    records.emplace_back(d, std::move(walks[i]));
  }
  json j;
  j["d"] = d;
  j["n"] = a.n;
  if (a.two_sided >= 0) j["m"] = a.two_sided;
  j["mode"] = mode;
  if (mode == "prefix" || mode == "escape") j["zeta"] = steps_to_string(zeta.steps());
  j["trials"] = trials;
  j["seed"] = ctx.cfg.seed;
  j["stream"] = ctx.stream;
  j["base_length"] = sampler.base_length();
  j["top_attempts"] = total.top_attempts;
  j["top_accepts"] = total.top_accepts;
  j["acceptance"] = total.top_attempts ? static_cast<double>(total.top_accepts) / total.top_attempts : 1.0;
  j["rejections"] = total.rejections;
  j["mean_end_distance_sq"] = msd.mean();
  std::string stem = "sample_d" + std::to_string(d) + "_n" + std::to_string(a.n);
  j["corpus"] = std::filesystem::path(ctx.artifact(stem, "sawc", corpus_bytes(ctx, records))).filename().string();
  std::string text = j.dump(2) + "\n";
  ctx.out << text;
  ctx.artifact(stem, "json", text);
  return 0;
}

struct CoupleArgs {
  std::string zeta1, zeta2, schedule, two_sided;
  int levels = 4;
  double base = 2.0;
  double scale = 0;
  int horizon = 0;
  bool traces = false;
};

CouplingSchedule make_schedule(const CoupleArgs& a, int k, int horizon) {
  if (!a.schedule.empty()) {
    auto pts = parse_ints(a.schedule);
    return CouplingSchedule::from_points(std::vector<int>(pts.begin(), pts.end()));
  }
  return CouplingSchedule::geometric(k, a.levels, a.base, a.scale, horizon);
}

int couple_two_sided(Context& ctx, const CoupleArgs& a) {
  const int d = ctx.cfg.d;
  auto [m, n] = parse_pair(a.two_sided);
  TwoSidedPath z1 = parse_middle(d, a.zeta1), z2 = parse_middle(d, a.zeta2);
  auto schedule = make_schedule(a, static_cast<int>(z1.positive_length()), std::max(m, n));
  SawSampler sampler(d, ctx.sampler_config());
  const std::uint64_t trials = ctx.trials_or(1000);
  std::vector<TwoSidedCouplingTrace> traces(trials);
  parallel_for(trials, ctx.cfg.workers, [&](std::size_t i) {
    Rng rng = sampler.stream(i);
    traces[i] = run_two_sided_coupling(sampler, m, n, z1, z2, schedule, rng);
  });
  std::ostringstream csv, lines;
  csv << "l,a_l,trials,failures,frequency,ci_lo,ci_hi,resamples\n";
  for (std::size_t l = 0; l < schedule.iterations(); ++l) {
    std::uint64_t failures = 0, resamples = 0;
    for (const auto& t : traces) {
      failures += t.records[l].success ? 0 : 1;
      resamples += t.records[l].resamples;
    }
    auto ci = wilson_interval(failures, trials);
    csv << l + 1 << ',' << schedule.a[l + 1] << ',' << trials << ',' << failures << ','
        << decimal(static_cast<double>(failures) / trials) << ',' << decimal(ci.lo) << ',' << decimal(ci.hi) << ','
        << resamples << '\n';
  }
  for (std::uint64_t i = 0; a.traces && i < trials; ++i) {
    json t;
    t["trial"] = i;
    t["schedule"] = traces[i].schedule;
    auto& per = t["per_iter"] = json::array();
    for (const auto& r : traces[i].records) {
      per.push_back({{"l", r.ell}, {"a_l", r.a}, {"success", r.success}, {"resamples", r.resamples}});
    }
    lines << t.dump() << '\n';
  }
  ctx.out << csv.str();
  std::string stem = "couple2_d" + std::to_string(d);
  ctx.artifact(stem, "csv", csv.str());
  if (a.traces) ctx.artifact(stem + "_traces", "jsonl", lines.str());
  return 0;
}

int cmd_couple(Context& ctx, const CoupleArgs& a) {
  const int d = ctx.cfg.d;
  if (auto w = coupling_dimension_warning(d)) ctx.err << "warning: " << *w << '\n';
  if (!a.two_sided.empty()) return couple_two_sided(ctx, a);
  Path z1(d, parse_steps(a.zeta1)), z2(d, parse_steps(a.zeta2));
  auto schedule = make_schedule(a, static_cast<int>(z1.length()), a.horizon);
  SawSampler sampler(d, ctx.sampler_config());
  std::vector<CouplingTrace> traces;
  auto stats = estimate_decoupling_stats(sampler, z1, z2, schedule, ctx.trials_or(1000), ctx.cfg.workers,
                                         a.traces ? &traces : nullptr);
  std::string csv = decoupling_csv(stats);
  ctx.out << csv;
  std::string stem = "couple_d" + std::to_string(d);
  ctx.artifact(stem, "csv", csv);
  if (a.traces) {
    std::string lines;
    for (std::size_t i = 0; i < traces.size(); ++i) lines += trace_json_line(i, traces[i]) + "\n";
    ctx.artifact(stem + "_traces", "jsonl", lines);
  }
  return 0;
}

struct PatternArgs {
  std::string zeta, exact, mc, reference;
  bool witness = false;
  int scalars = 0;
  int ratio_length = 0;
};

int cmd_pattern(Context& ctx, const PatternArgs& a) {
  const int d = ctx.cfg.d;
  CachedEnumerator ce(ctx);
  std::string stem = "pattern_d" + std::to_string(d);
  if (a.scalars > 0) {
    SawSampler sampler(d, ctx.sampler_config());
    auto est = scalar_estimators(sampler, ce.enumerator, a.scalars, ctx.trials_or(10'000), a.ratio_length,
                                 ctx.cfg.workers);
    json j;
    j["d"] = d;
    j["N"] = est.N;
    j["trials"] = est.trials;
    j["mu_escape"] = est.mu_escape;
    j["mu_escape_se"] = est.mu_escape_se;
    j["mu_squared_escape"] = est.mu_squared_escape;
    j["mu_squared_escape_se"] = est.mu_squared_escape_se;
    j["ratio_length"] = est.ratio_length;
    j["mu_ratio"] = rational_text(est.mu_ratio);
    j["mu_ratio_value"] = to_double(est.mu_ratio);
    j["msd_over_n"] = est.msd_over_n;
    j["msd_over_n_se"] = est.msd_over_n_se;
    std::string text = j.dump(2) + "\n";
    ctx.out << text;
    ctx.artifact("scalars_d" + std::to_string(d), "json", text);
    if (a.zeta.empty()) return 0;
  }
  if (a.zeta.empty()) throw UsageError("pattern needs --zeta (or --scalars N)");
  Path zeta(d, parse_steps(a.zeta));
  if (a.witness) {
    auto w = is_proper_internal_pattern(d, zeta, 0, ctx.cfg.node_limit);
    json j;
    j["d"] = d;
    j["zeta"] = steps_to_string(zeta.steps());
    j["found"] = w.found;
    j["witness"] = w.witness ? steps_to_string(w.witness->steps()) : "";
    j["searched_up_to"] = w.searched_up_to;
    j["node_limit_hit"] = w.node_limit_hit;
    std::string text = j.dump(2) + "\n";
    ctx.out << text;
    ctx.artifact(stem + "_witness", "json", text);
  }
  if (a.exact.empty() && a.mc.empty() && a.reference.empty()) return 0;

  DensityReport report;
  report.d = d;
  report.pattern = zeta;
  std::map<int, DensityRow> rows;
  for (auto n : parse_ints(a.exact)) {
    auto& row = rows[static_cast<int>(n)];
    row.n = static_cast<int>(n);
    row.exact_mean = exact_mean_density(d, row.n, zeta, ctx.cfg.workers, ctx.cfg.node_limit).mean;
  }
  SawSampler sampler(d, ctx.sampler_config());
  const std::uint64_t trials = ctx.trials_or(10'000);
  std::uint64_t first = 0;
  for (auto n : parse_ints(a.mc)) {
    auto& row = rows[static_cast<int>(n)];
    row.n = static_cast<int>(n);
    row.mc = mc_density_stats(sampler, row.n, zeta, trials, ctx.cfg.workers, first);
    first += trials;
  }
  for (auto& [n, row] : rows) report.rows.push_back(row);
  if (!a.reference.empty()) {
    auto [m, n] = parse_pair(a.reference);
    report.reference = two_sided_prefix_prob(ce.enumerator, d, m, n, zeta);
    report.reference_m = m;
    report.reference_n = n;
  }
  std::string text = density_report_json(report);
  ctx.out << text;
  ctx.artifact(stem, "json", text);
  ctx.artifact(stem, "csv", density_report_csv(report));
  return 0;
}

int cmd_verify(Context& ctx, int n, bool full) {
  CachedEnumerator ce(ctx);
  VerifyOptions o;
  o.d = ctx.cfg.d;
  o.n = n;
  o.full = full;
  o.seed = ctx.cfg.seed;
  o.workers = ctx.cfg.workers;
  auto results = run_verify(o, ce.enumerator, &ctx.out);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  ctx.out << (failed == 0 ? "all " + std::to_string(results.size()) + " checks passed"
                          : std::to_string(failed) + " of " + std::to_string(results.size()) + " checks failed")
          << '\n';
  ctx.artifact("verify_d" + std::to_string(o.d) + "_n" + std::to_string(n), "json", verify_report_json(o, results));
  return failed == 0 ? 0 : 1;
}

// --- wiring ------------------------------------------------------------------

std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

// Config [params] entries become defaults for options with the same name.
void apply_params(CLI::App& app, const std::map<std::string, std::string>& params) {
  for (auto* sub : app.get_subcommands({})) {
    for (auto* opt : sub->get_options()) {
      for (const auto& [key, value] : params) {
        auto longs = opt->get_lnames();
        auto shorts = opt->get_snames();
        bool match = std::find(longs.begin(), longs.end(), key) != longs.end() ||
                     std::find(shorts.begin(), shorts.end(), key) != shorts.end();
        if (match) opt->run_callback_for_default()->default_val(value)->required(false);
      }
    }
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact enumeration, sampling and coupling of self-avoiding walks on Z^d", "sawlab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  try {
    Context ctx{.cfg = {}, .trials = 0, .stream = 0, .cache_flag = {}, .out = out, .err = err};
    std::string config_path = find_config_path(args);
    if (!config_path.empty()) ctx.cfg = RunConfig::load(config_path);

    app.add_option("--config", config_path, "key=value run configuration file");
    app.add_option("-d,--dim", ctx.cfg.d, "lattice dimension");
    app.add_option("--cache", ctx.cache_flag, "count cache file (default: SAWLAB_CACHE, then config)");
    app.add_option("--out", ctx.cfg.output_dir, "artifact directory");
    app.add_option("--seed", ctx.cfg.seed, "random seed");
    app.add_option("--trials", ctx.trials, "number of draws or coupling trials");
    app.add_option("--stream", ctx.stream, "random stream id");
    app.add_option("--node-limit", ctx.cfg.node_limit, "search node budget");
    app.add_option("--rejection-cap", ctx.cfg.rejection_cap, "rejection budget per draw");
    app.add_option("--workers", ctx.cfg.workers, "worker threads (0 = all cores)");

    CountArgs count_args;
    auto* count = app.add_subcommand("count", "exact count c_n, or a conditioned variant");
    count->add_option("-n", count_args.n, "length (positive side for --two-sided)")->required();
    count->add_option("--end", count_args.end, "endpoint coordinates, comma separated");
    count->add_option("--prefix", count_args.prefix, "prefix direction codes");
    count->add_option("--two-sided", count_args.two_sided, "negative side length m");
    count->add_option("--middle", count_args.middle, "two-sided condition 'neg/pos'");

    TwoPointArgs tp_args;
    auto* twopoint = app.add_subcommand("twopoint", "truncated two-point function");
    twopoint->add_option("-x", tp_args.x, "target point, comma separated")->required();
    twopoint->add_option("-N,--max-length", tp_args.max_length, "largest walk length");
    twopoint->add_option("--mu", tp_args.mu, "weight base mu")->required();

    int table_n = 10;
    auto* table = app.add_subcommand("table", "ratio and non-intersection table up to n");
    table->add_option("-n", table_n, "largest length");

    FixedPointArgs fp_args;
    auto* fixedpoint = app.add_subcommand("fixedpoint", "fixed point of the escape operator on SAW_n");
    fixedpoint->add_option("-n", fp_args.n, "walk length")->required();
    fixedpoint->add_flag("--no-trim", fp_args.no_trim, "keep walks no walk escapes");
    fixedpoint->add_option("--tol", fp_args.tol, "L1 residual target");
    fixedpoint->add_option("--starts", fp_args.starts, "extra random starts");
    fixedpoint->add_option("--compare", fp_args.compare, "compare with the marginal of SAW_m");
    fixedpoint->add_option("--top", fp_args.top, "paths listed in the report");
    fixedpoint->add_option("--max-paths", fp_args.max_paths, "largest matrix dimension");

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "uniform draws written to a SAWC corpus");
    sample->add_option("-n", sample_args.n, "walk length (positive side for --two-sided)")->required();
    sample->add_option("--base", sample_args.base, "dimerization base length");
    auto* prefix_opt = sample->add_option("--prefix", sample_args.prefix, "condition on this prefix");
    auto* escape_opt = sample->add_option("--escape", sample_args.escape, "draw escapers of this walk");
    auto* two_opt = sample->add_option("--two-sided", sample_args.two_sided, "negative side length m");
    prefix_opt->excludes(escape_opt)->excludes(two_opt);
    escape_opt->excludes(two_opt);

    CoupleArgs couple_args;
    auto* couple = app.add_subcommand("couple", "coupling of two prefix-conditioned walks");
    couple->add_option("--zeta1", couple_args.zeta1, "first prefix (or 'neg/pos' middle)")->required();
    couple->add_option("--zeta2", couple_args.zeta2, "second prefix (or 'neg/pos' middle)")->required();
    couple->add_option("--levels", couple_args.levels, "geometric schedule levels");
    couple->add_option("--base", couple_args.base, "geometric schedule base");
    couple->add_option("--scale", couple_args.scale, "geometric schedule scale (0 = k)");
    couple->add_option("--horizon", couple_args.horizon, "walk length N (0 = 4 a_levels)");
    couple->add_option("--schedule", couple_args.schedule, "explicit block ends a_0,...,a_L");
    couple->add_option("--two-sided", couple_args.two_sided, "two-sided coupling on [-m, n], given as m,n");
    couple->add_flag("--traces", couple_args.traces, "also write per-trial JSONL traces");

    PatternArgs pattern_args;
    auto* pattern = app.add_subcommand("pattern", "pattern densities and scalar estimates");
    pattern->add_option("--zeta", pattern_args.zeta, "pattern direction codes");
    pattern->add_option("--exact", pattern_args.exact, "lengths for exact means, comma separated");
    pattern->add_option("--mc", pattern_args.mc, "lengths for sampled densities, comma separated");
    pattern->add_option("--reference", pattern_args.reference, "two-sided reference m,n");
    pattern->add_flag("--witness", pattern_args.witness, "search for a walk with three occurrences");
    pattern->add_option("--scalars", pattern_args.scalars, "connective constant estimates at length N");
    pattern->add_option("--ratio-length", pattern_args.ratio_length, "n for the ratio c_n / c_{n-1}");

    int verify_n = 6;
    bool verify_full = false;
    auto* verify = app.add_subcommand("verify", "exact identity suite");
    verify->add_option("-n", verify_n, "largest length");
    verify->add_flag("--full", verify_full, "add the seeded statistical checks");

    apply_params(app, ctx.cfg.params);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    ctx.cfg.validate();

    if (count->parsed()) return cmd_count(ctx, count_args);
    if (twopoint->parsed()) return cmd_twopoint(ctx, tp_args);
    if (table->parsed()) return cmd_table(ctx, table_n);
    if (fixedpoint->parsed()) return cmd_fixedpoint(ctx, fp_args);
    if (sample->parsed()) return cmd_sample(ctx, sample_args);
    if (couple->parsed()) return cmd_couple(ctx, couple_args);
    if (pattern->parsed()) return cmd_pattern(ctx, pattern_args);
    if (verify->parsed()) return cmd_verify(ctx, verify_n, verify_full);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const BudgetError& e) {
    err << "budget exhausted: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const SawError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace sawlab
