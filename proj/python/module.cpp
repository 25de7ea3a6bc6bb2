#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sawlab/cli.hpp"
#include "sawlab/coupling.hpp"
#include "sawlab/enumerate.hpp"
#include "sawlab/patterns.hpp"
#include "sawlab/sampler.hpp"
#include "sawlab/spectral.hpp"
#include "sawlab/store.hpp"
#include "sawlab/verify.hpp"

namespace py = pybind11;
using namespace sawlab;

namespace {

using Steps = std::vector<Step>;

py::object big(const BigCount& v) { return py::int_(py::str(to_decimal(v))); }

py::object fraction(const Rational& r) {
  static py::object cls = py::module_::import("fractions").attr("Fraction");
  return cls(big(numerator(r)), big(denominator(r)));
}

Steps as_steps(const std::span<const Step> s) { return Steps(s.begin(), s.end()); }

LatticePoint point(const std::vector<std::int64_t>& coords) { return LatticePoint(coords); }

class PyEnumerator {
 public:
  PyEnumerator(unsigned workers, std::uint64_t node_limit, std::optional<std::string> cache_path)
      : enumerator_(EnumOptions{.workers = workers, .node_limit = node_limit}) {
    if (cache_path) {
      cache_ = std::make_unique<CountCache>(*cache_path);
      enumerator_.attach_cache(cache_.get());
    }
  }

  py::object count(int d, int n) {
    BigCount v;
    {
      py::gil_scoped_release release;
      v = enumerator_.count_saws(d, n);
    }
    return big(v);
  }

  py::object count_ending_at(int d, int n, const std::vector<std::int64_t>& x) {
    BigCount v;
    {
      py::gil_scoped_release release;
      v = enumerator_.count_ending_at(d, n, point(x));
    }
    return big(v);
  }

  py::object count_extensions(int d, int n, const Steps& zeta) {
    Path p(d, zeta);
    BigCount v;
    {
      py::gil_scoped_release release;
      v = enumerator_.count_extensions(d, n, p);
    }
    return big(v);
  }

  py::object count_two_sided(int d, int m, int n, const Steps& negative, const Steps& positive) {
    TwoSidedPath xi(Path(d, negative), Path(d, positive));
    BigCount v;
    {
      py::gil_scoped_release release;
      v = enumerator_.count_two_sided(d, m, n, xi);
    }
    return big(v);
  }

  double two_point(int d, const std::vector<std::int64_t>& x, int max_length, double mu) {
    py::gil_scoped_release release;
    return enumerator_.truncated_two_point(d, point(x), max_length, mu);
  }

  py::list table(int d, int n_max) {
    std::vector<AsymptoticRow> rows;
    {
      py::gil_scoped_release release;
      rows = enumerator_.asymptotic_table(d, n_max);
    }
    py::list out;
    for (const auto& r : rows) {
      py::dict row;
      row["n"] = r.n;
      row["count"] = big(r.count);
      row["ratio"] = r.ratio ? fraction(*r.ratio) : py::none();
      row["root"] = r.root ? py::cast(*r.root) : py::none();
      row["amplitude"] = r.amplitude ? py::cast(*r.amplitude) : py::none();
      row["nonintersection"] = r.nonintersection ? fraction(*r.nonintersection) : py::none();
      out.append(row);
    }
    return out;
  }

  py::object two_sided_prefix_prob(int d, int m, int n, const Steps& zeta) {
    Path p(d, zeta);
    Rational r;
    {
      py::gil_scoped_release release;
      r = sawlab::two_sided_prefix_prob(enumerator_, d, m, n, p);
    }
    return fraction(r);
  }

  Enumerator& raw() { return enumerator_; }

 private:
  std::unique_ptr<CountCache> cache_;
  Enumerator enumerator_;
};

py::dict trace_dict(const CouplingTrace& t) {
  py::dict d;
  d["schedule"] = t.schedule;
  py::list per;
  for (const auto& r : t.records) {
    py::dict row;
    row["l"] = r.ell;
    row["a_l"] = r.a;
    row["success"] = r.success;
    row["resamples"] = r.resamples;
    per.append(row);
  }
  d["per_iter"] = per;
  d["first"] = as_steps(t.first.steps());
  d["second"] = as_steps(t.second.steps());
  d["final_equal_from"] = t.final_equal_from;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sawlab, m) {
  m.doc() = "Self-avoiding walk enumeration, sampling and coupling";

  auto& saw_error = py::register_exception<SawError>(m, "SawError");
  py::register_exception<BudgetError>(m, "BudgetError", saw_error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", saw_error.ptr());
  py::register_exception<NotSelfAvoiding>(m, "NotSelfAvoiding", saw_error.ptr());

  // --- paths ---
  m.def("validate", [](const Steps& steps, int d) { return as_steps(validate(steps, d).steps()); },
        py::arg("steps"), py::arg("d"), "Checks a step list and returns it; raises NotSelfAvoiding.");
  m.def("escapes", [](const Steps& tail, const Steps& head, int d) { return escapes_steps(d, tail, head); },
        py::arg("tail"), py::arg("head"), py::arg("d"));
  m.def("shift", [](const Steps& steps, std::size_t k, int d) { return as_steps(shift(Path(d, steps), k).steps()); },
        py::arg("steps"), py::arg("k"), py::arg("d"));
  m.def("pattern_density",
        [](const Steps& walk, const Steps& zeta, int d) { return fraction(pattern_density(Path(d, walk), Path(d, zeta))); },
        py::arg("walk"), py::arg("zeta"), py::arg("d"));
  m.def("endpoint", [](const Steps& steps, int d) {
    auto e = Path(d, steps).endpoint();
    return std::vector<std::int64_t>(e.coords().begin(), e.coords().end());
  }, py::arg("steps"), py::arg("d"));

  // --- enumeration ---
  py::class_<PyEnumerator>(m, "Enumerator")
      .def(py::init<unsigned, std::uint64_t, std::optional<std::string>>(), py::arg("workers") = 0,
           py::arg("node_limit") = 0, py::arg("cache_path") = py::none())
      .def("count", &PyEnumerator::count, py::arg("d"), py::arg("n"))
      .def("count_ending_at", &PyEnumerator::count_ending_at, py::arg("d"), py::arg("n"), py::arg("x"))
      .def("count_extensions", &PyEnumerator::count_extensions, py::arg("d"), py::arg("n"), py::arg("zeta"))
      .def("count_two_sided", &PyEnumerator::count_two_sided, py::arg("d"), py::arg("m"), py::arg("n"),
           py::arg("negative") = Steps{}, py::arg("positive") = Steps{})
      .def("two_point", &PyEnumerator::two_point, py::arg("d"), py::arg("x"), py::arg("max_length"), py::arg("mu"))
      .def("table", &PyEnumerator::table, py::arg("d"), py::arg("n_max"))
      .def("two_sided_prefix_prob", &PyEnumerator::two_sided_prefix_prob, py::arg("d"), py::arg("m"), py::arg("n"),
           py::arg("zeta"));

  m.def("count_saws", [](int d, int n, unsigned workers) { return PyEnumerator(workers, 0, std::nullopt).count(d, n); },
        py::arg("d"), py::arg("n"), py::arg("workers") = 0);
  m.def("list_saws", [](int d, int n) {
    Steps flat;
    {
      py::gil_scoped_release release;
      flat = list_saws(d, n, 2'000'000);
    }
    std::vector<Steps> out;
    for (std::size_t i = 0; n > 0 && i * n < flat.size(); ++i) out.emplace_back(flat.begin() + i * n, flat.begin() + (i + 1) * n);
    if (n == 0) out.emplace_back();
    return out;
  }, py::arg("d"), py::arg("n"));

  // --- sampling ---
  py::class_<SawSampler>(m, "Sampler")
      .def(py::init([](int d, std::uint64_t seed, int base_length, std::uint64_t max_rejections, std::uint64_t stream_id) {
             return SawSampler(d, {.seed = seed, .base_length = base_length, .max_rejections = max_rejections,
                                   .stream_id = stream_id});
           }),
           py::arg("d"), py::arg("seed") = 0, py::arg("base_length") = 0, py::arg("max_rejections") = 1'000'000,
           py::arg("stream_id") = 0)
      .def_property_readonly("d", &SawSampler::dimension)
      .def_property_readonly("base_length", &SawSampler::base_length)
      .def("sample", [](const SawSampler& s, int n, std::uint64_t index) {
        py::gil_scoped_release release;
        Rng rng = s.stream(index);
        return s.uniform_steps(n, rng);
      }, py::arg("n"), py::arg("index") = 0)
      .def("sample_many", [](const SawSampler& s, int n, std::size_t count, unsigned workers, std::uint64_t first) {
        std::vector<Path> paths;
        {
          py::gil_scoped_release release;
          paths = s.sample_many(n, count, workers, first);
        }
        std::vector<Steps> out;
        out.reserve(paths.size());
        for (const auto& p : paths) out.push_back(as_steps(p.steps()));
        return out;
      }, py::arg("n"), py::arg("count"), py::arg("workers") = 0, py::arg("first") = 0)
      .def("sample_escaping", [](const SawSampler& s, int n, const Steps& zeta, std::uint64_t index) {
        Path z(s.dimension(), zeta);
        py::gil_scoped_release release;
        Rng rng = s.stream(index);
        return s.escaping_steps(n, z.steps(), rng);
      }, py::arg("n"), py::arg("zeta"), py::arg("index") = 0)
      .def("sample_prefix_conditioned", [](const SawSampler& s, int n, const Steps& zeta, std::uint64_t index) {
        Path z(s.dimension(), zeta);
        py::gil_scoped_release release;
        Rng rng = s.stream(index);
        return as_steps(s.sample_prefix_conditioned(n, z, rng).steps());
      }, py::arg("n"), py::arg("zeta"), py::arg("index") = 0)
      .def("sample_two_sided", [](const SawSampler& s, int m, int n, std::uint64_t index) {
        py::gil_scoped_release release;
        Rng rng = s.stream(index);
        auto t = s.sample_two_sided(m, n, rng);
        return std::pair{as_steps(t.negative().steps()), as_steps(t.positive().steps())};
      }, py::arg("m"), py::arg("n"), py::arg("index") = 0);

  // --- fixed point ---
  m.def("fixed_point", [](int d, int n, bool trim, double tol, int starts, std::uint64_t seed, unsigned workers) {
    EscapeMatrix mat;
    FixedPoint fp;
    double sym = 0;
    {
      py::gil_scoped_release release;
      mat = build_escape_matrix(d, n, trim, {.workers = workers});
      fp = perron_fixed_point(mat, {.tol = tol, .random_starts = starts, .seed = seed, .workers = workers});
      sym = symmetry_defect(mat, fp.full_values);
    }
    py::dict r;
    r["Z"] = fp.measure.Z;
    r["residual"] = fp.residual;
    r["iters"] = fp.iters;
    r["start_spread"] = fp.start_spread;
    r["symmetry_defect"] = sym;
    r["primitivity_k"] = fp.primitivity_k ? py::cast(*fp.primitivity_k) : py::none();
    r["trimmed"] = mat.trimmed;
    std::vector<Steps> paths;
    for (std::size_t j = 0; j < mat.full_size(); ++j) paths.push_back(as_steps(mat.full_path(j)));
    r["paths"] = paths;
    r["probabilities"] = fp.full_values;
    return r;
  }, py::arg("d"), py::arg("n"), py::arg("trim") = true, py::arg("tol") = 1e-12, py::arg("starts") = 2,
     py::arg("seed") = 0, py::arg("workers") = 1);

  // --- coupling ---
  m.def("couple", [](const SawSampler& s, const Steps& zeta1, const Steps& zeta2, std::vector<int> schedule,
                     std::uint64_t index) {
    Path z1(s.dimension(), zeta1), z2(s.dimension(), zeta2);
    auto sched = CouplingSchedule::from_points(std::move(schedule));
    CouplingTrace t;
    {
      py::gil_scoped_release release;
      Rng rng = s.stream(index);
      t = run_one_sided_coupling(s, z1, z2, sched, rng);
    }
    return trace_dict(t);
  }, py::arg("sampler"), py::arg("zeta1"), py::arg("zeta2"), py::arg("schedule"), py::arg("index") = 0);
  m.def("geometric_schedule", [](int k, int levels, double base, double scale, int horizon) {
    return CouplingSchedule::geometric(k, levels, base, scale, horizon).a;
  }, py::arg("k"), py::arg("levels"), py::arg("base") = 2.0, py::arg("scale") = 0.0, py::arg("horizon") = 0);
  m.def("decoupling_stats", [](const SawSampler& s, const Steps& zeta1, const Steps& zeta2, std::vector<int> schedule,
                               std::uint64_t trials, unsigned workers) {
    Path z1(s.dimension(), zeta1), z2(s.dimension(), zeta2);
    auto sched = CouplingSchedule::from_points(std::move(schedule));
    DecouplingStats st;
    {
      py::gil_scoped_release release;
      st = estimate_decoupling_stats(s, z1, z2, sched, trials, workers);
    }
    py::list levels;
    for (const auto& l : st.levels) {
      py::dict row;
      row["l"] = l.ell;
      row["a_l"] = l.a;
      row["failures"] = l.failures;
      row["frequency"] = static_cast<double>(l.failures) / static_cast<double>(st.trials);
      row["ci"] = std::pair{l.ci.lo, l.ci.hi};
      row["resamples"] = l.resamples;
      levels.append(row);
    }
    return levels;
  }, py::arg("sampler"), py::arg("zeta1"), py::arg("zeta2"), py::arg("schedule"), py::arg("trials"),
     py::arg("workers") = 0);

  // --- patterns ---
  m.def("exact_mean_density", [](int d, int n, const Steps& zeta, unsigned workers) {
    Path z(d, zeta);
    Rational r;
    {
      py::gil_scoped_release release;
      r = exact_mean_density(d, n, z, workers).mean;
    }
    return fraction(r);
  }, py::arg("d"), py::arg("n"), py::arg("zeta"), py::arg("workers") = 0);
  m.def("mc_density", [](const SawSampler& s, int n, const Steps& zeta, std::uint64_t trials, unsigned workers) {
    Path z(s.dimension(), zeta);
    py::gil_scoped_release release;
    auto st = mc_density_stats(s, n, z, trials, workers);
    return std::tuple{st.mean, st.variance, std::pair{st.ci.lo, st.ci.hi}};
  }, py::arg("sampler"), py::arg("n"), py::arg("zeta"), py::arg("trials"), py::arg("workers") = 0);
  m.def("scalar_estimates", [](const SawSampler& s, PyEnumerator& e, int N, std::uint64_t trials, int ratio_length,
                               unsigned workers) {
    ScalarEstimates est;
    {
      py::gil_scoped_release release;
      est = scalar_estimators(s, e.raw(), N, trials, ratio_length, workers);
    }
    py::dict r;
    r["N"] = est.N;
    r["trials"] = est.trials;
    r["mu_escape"] = est.mu_escape;
    r["mu_escape_se"] = est.mu_escape_se;
    r["mu_squared_escape"] = est.mu_squared_escape;
    r["mu_squared_escape_se"] = est.mu_squared_escape_se;
    r["ratio_length"] = est.ratio_length;
    r["mu_ratio"] = fraction(est.mu_ratio);
    r["msd_over_n"] = est.msd_over_n;
    r["msd_over_n_se"] = est.msd_over_n_se;
    return r;
  }, py::arg("sampler"), py::arg("enumerator"), py::arg("N"), py::arg("trials"), py::arg("ratio_length") = 0,
     py::arg("workers") = 0);

  // --- suite and CLI ---
  m.def("verify", [](int d, int n, bool full, std::uint64_t seed, unsigned workers) {
    std::vector<CheckResult> results;
    {
      py::gil_scoped_release release;
      Enumerator e(EnumOptions{.workers = workers});
      results = run_verify({.d = d, .n = n, .full = full, .seed = seed, .workers = workers}, e);
    }
    py::list out;
    for (const auto& r : results) out.append(py::make_tuple(r.name, r.passed, r.detail));
    return out;
  }, py::arg("d"), py::arg("n"), py::arg("full") = false, py::arg("seed") = 1, py::arg("workers") = 0);
  m.def("run_command", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run_command(args, out, err);
    }
    return std::tuple{code, out.str(), err.str()};
  }, py::arg("args"), "Runs a CLI command line; returns (exit_code, stdout, stderr).");
}
