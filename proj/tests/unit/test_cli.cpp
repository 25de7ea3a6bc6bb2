#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "sawlab/cli.hpp"
#include "sawlab/store.hpp"

using namespace sawlab;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

// Fresh working area with its own cache and artifact directory.
struct Sandbox {
  fs::path root;

  explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / "sawlab_cli_tests" / name) {
    fs::remove_all(root);
    fs::create_directories(root);
    unsetenv("SAWLAB_CACHE");
  }

  std::string out_dir() const { return (root / "out").string(); }
  std::string cache() const { return (root / "cache.jsonl").string(); }

  Run run(std::vector<std::string> args, bool with_paths = true) const {
    if (with_paths) {
      args.insert(args.end(), {"--out", out_dir(), "--cache", cache()});
    }
    std::ostringstream out, err;
    Run r;
    r.code = run_command(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(fs::path(out_dir()) / name, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
};

std::size_t lines_in(const std::string& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
  return n;
}

}  // namespace

TEST_CASE("count prints c_3 and caches it") {
  Sandbox box("count");
  auto r = box.run({"count", "-d", "5", "-n", "3"});
  CHECK(r.code == 0);
  CHECK(r.out == "810\n");
  CountCache cache(box.cache());
  CHECK(cache.get({5, CountKind::plain, 3, ""}) == BigCount(810));
  CHECK(fs::exists(fs::path(box.out_dir()) / "count.v1.json"));
  CHECK(fs::exists(fs::path(box.out_dir()) / "count.v1.json.meta.json"));
  auto j = nlohmann::json::parse(box.read("count.v1.json"));
  CHECK(j["count"] == "810");
}

TEST_CASE("conditioned counts match the oracle") {
  Sandbox box("conditioned");
  CHECK(box.run({"count", "-d", "2", "-n", "5", "--prefix", "0,2"}).out ==
        std::to_string(oracle::count_prefix(2, 5, {0, 2})) + "\n");
  CHECK(box.run({"count", "-d", "2", "-n", "3", "--end", "2,1"}).out ==
        std::to_string(oracle::count_end(2, 3, {2, 1})) + "\n");
  CHECK(box.run({"count", "-d", "2", "-n", "2", "--two-sided", "2", "--middle", "/0"}).out ==
        std::to_string(oracle::count_two_sided(2, 2, 2, {}, {0})) + "\n");
}

TEST_CASE("fixedpoint reports Z = 2d - 1 and a uniform P_1") {
  Sandbox box("fixedpoint");
  auto r = box.run({"fixedpoint", "-d", "5", "-n", "1"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["Z"].get<double>() == doctest::Approx(9).epsilon(1e-12));
  for (const auto& row : j["top_paths"]) CHECK(row["prob"].get<double>() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fs::exists(fs::path(box.out_dir()) / "fixedpoint_d5_n1.v1.csv"));
}

TEST_CASE("verify -d 2 -n 6 is all green") {
  Sandbox box("verify");
  auto r = box.run({"verify", "-d", "2", "-n", "6"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("checks passed") != std::string::npos);
}

TEST_CASE("exit codes") {
  Sandbox box("exit");
  CHECK(box.run({"count", "-d", "2", "-n", "30", "--node-limit", "1000"}).code == 2);
  CHECK(box.run({"count", "-d", "2"}).code == 1);
  CHECK(box.run({"nonsense"}).code == 1);
  CHECK(box.run({}, false).code == 1);
  CHECK(box.run({"count", "-d", "2", "-n", "3", "--prefix", "0,1"}).code == 1);
  CHECK(box.run({"count", "-d", "0", "-n", "3"}).code == 1);
  CHECK(box.run({"sample", "-d", "2", "-n", "3", "--prefix", "0", "--escape", "0"}).code == 1);
  auto help = box.run({"--help"}, false);
  CHECK(help.code == 0);
  CHECK(help.out.find("verify") != std::string::npos);
  auto usage = box.run({"pattern", "-d", "2"});
  CHECK(usage.code == 1);
  CHECK(usage.err.find("Usage") != std::string::npos);
}

TEST_CASE("reruns write new versions with identical content") {
  Sandbox box("rerun");
  std::vector<std::string> args{"sample", "-d", "3", "-n", "12", "--trials", "40", "--seed", "9"};
  REQUIRE(box.run(args).code == 0);
  auto more = args;
  more.insert(more.end(), {"--workers", "3"});
  REQUIRE(box.run(more).code == 0);
  CHECK(box.read("sample_d3_n12.v1.sawc") == box.read("sample_d3_n12.v2.sawc"));
  CHECK(box.read("sample_d3_n12.v1.json") ==
        [&] {
          // the summary names its own corpus version
          auto text = box.read("sample_d3_n12.v2.json");
          auto pos = text.find("v2.sawc");
          return text.replace(pos, 2, "v1");
        }());

  CorpusReader reader((fs::path(box.out_dir()) / "sample_d3_n12.v1.sawc").string());
  auto paths = reader.read_all();
  CHECK(paths.size() == 40);
  for (const auto& p : paths) {
    CHECK(p.length() == 12);
    CHECK(oracle::self_avoiding(3, oracle::Walk(p.steps().begin(), p.steps().end())));
  }

  auto c1 = box.run({"couple", "-d", "5", "--zeta1", "0", "--zeta2", "2", "--trials", "50", "--traces"});
  auto c2 = box.run({"couple", "-d", "5", "--zeta1", "0", "--zeta2", "2", "--trials", "50", "--traces"});
  CHECK(c1.out == c2.out);
  CHECK(box.read("couple_d5_traces.v1.jsonl") == box.read("couple_d5_traces.v2.jsonl"));
  CHECK(lines_in((fs::path(box.out_dir()) / "couple_d5_traces.v1.jsonl").string()) == 50);
}

TEST_CASE("cache path precedence: flag, then SAWLAB_CACHE, then config") {
  Sandbox box("precedence");
  auto env_cache = (box.root / "env.jsonl").string();
  auto cfg_cache = (box.root / "cfg.jsonl").string();
  RunConfig cfg;
  cfg.d = 5;
  cfg.cache_path = cfg_cache;
  cfg.output_dir = box.out_dir();
  cfg.params["n"] = "2";
  auto cfg_path = (box.root / "run.cfg").string();
  cfg.save(cfg_path);

  auto r = box.run({"count", "--config", cfg_path}, false);
  CHECK(r.code == 0);
  CHECK(r.out == "90\n");
  CHECK(lines_in(cfg_cache) == 1);

  setenv("SAWLAB_CACHE", env_cache.c_str(), 1);
  CHECK(box.run({"count", "--config", cfg_path, "-n", "3"}, false).out == "810\n");
  CHECK(lines_in(env_cache) == 1);
  CHECK(lines_in(cfg_cache) == 1);

  auto flag_cache = (box.root / "flag.jsonl").string();
  CHECK(box.run({"count", "--config", cfg_path, "-n", "1", "--cache", flag_cache}, false).out == "10\n");
  CHECK(lines_in(flag_cache) == 1);
  CHECK(lines_in(env_cache) == 1);
  unsetenv("SAWLAB_CACHE");
}

TEST_CASE("other commands produce their artifacts") {
  Sandbox box("others");
  auto tp = box.run({"twopoint", "-d", "2", "-x", "1,1", "-N", "4", "--mu", "2"});
  CHECK(tp.code == 0);
  double expected = 0;
  for (int n = 0; n <= 4; ++n) expected += oracle::count_end(2, n, {1, 1}) * std::pow(2.0, -n);
  CHECK(std::stod(tp.out) == doctest::Approx(expected).epsilon(1e-15));

  auto table = box.run({"table", "-d", "2", "-n", "6"});
  CHECK(table.code == 0);
  CHECK(table.out.find("6,780,") != std::string::npos);
  CHECK(box.read("table_d2.v1.csv") == table.out);

  auto pat = box.run({"pattern", "-d", "5", "--zeta", "0", "--exact", "3,4", "--reference", "2,2"});
  CHECK(pat.code == 0);
  auto j = nlohmann::json::parse(pat.out);
  CHECK(j["rows"][0]["exact_mean"] == "1/10");
  CHECK(j["reference"]["exact"] == "1/10");
  CHECK(fs::exists(fs::path(box.out_dir()) / "pattern_d5.v1.csv"));

  auto two = box.run({"couple", "-d", "5", "--zeta1", "0/2", "--zeta2", "0/4", "--two-sided", "4,4", "--schedule",
                      "1,2,4", "--trials", "20"});
  CHECK(two.code == 0);
  CHECK(two.out.rfind("l,a_l,trials,failures", 0) == 0);
}
