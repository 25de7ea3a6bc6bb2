#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sawlab/enumerate.hpp"
#include "sawlab/store.hpp"

using namespace sawlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "sawlab_store_tests";
  fs::create_directories(dir);
  auto p = dir / name;
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("cache miss, put, get") {
  auto path = scratch("cache1.jsonl");
  CountCache cache(path.string());
  CountKey key{5, CountKind::plain, 3, ""};
  CHECK_FALSE(cache.get(key).has_value());
  cache.put(key, 810);
  CHECK(cache.get(key) == BigCount(810));

  CountCache reopened(path.string());
  CHECK(to_decimal(*reopened.get(key)) == "810");
}

TEST_CASE("cache keeps big integers exact") {
  auto path = scratch("cache2.jsonl");
  BigCount huge("123456789012345678901234567890123456789");
  {
    CountCache cache(path.string());
    cache.put(CountKey{7, CountKind::prefix, 40, "z=0,2"}, huge);
  }
  CountCache cache(path.string());
  CHECK(*cache.get(CountKey{7, CountKind::prefix, 40, "z=0,2"}) == huge);
}

TEST_CASE("corrupt lines are skipped with a warning") {
  auto path = scratch("cache3.jsonl");
  CountKey good{2, CountKind::plain, 4, ""};
  std::string line = CountCache::format_line(good, 100);
  std::string tampered = CountCache::format_line(CountKey{2, CountKind::plain, 5, ""}, 284);
  tampered.replace(tampered.find("284"), 3, "285");
  {
    std::ofstream out(path);
    out << line << "\n" << tampered << "\n" << "{not json\n";
  }
  CountCache cache(path.string());
  CHECK(cache.get(good) == BigCount(100));
  CHECK_FALSE(cache.get(CountKey{2, CountKind::plain, 5, ""}).has_value());
  CHECK(cache.warnings().size() == 2);
  CHECK_THROWS_AS(CountCache::parse_line(tampered), CorruptCache);
}

TEST_CASE("readers see only complete lines from a concurrent appender") {
  auto path = scratch("cache4.jsonl");
  CountCache writer(path.string());
  writer.put(CountKey{2, CountKind::plain, 1, ""}, 4);
  // Simulate an append in progress: a partial line without newline.
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"d":2,"kind":"plain","n":2,)";
  }
  CountCache reader(path.string());
  CHECK(reader.get(CountKey{2, CountKind::plain, 1, ""}) == BigCount(4));
  CHECK(reader.size() == 1);
  CHECK(reader.warnings().empty());
}

TEST_CASE("cached c_8 (d=2) equals recomputation") {
  auto path = scratch("cache5.jsonl");
  {
    CountCache cache(path.string());
    Enumerator e;
    e.attach_cache(&cache);
    e.count_saws(2, 8);
  }
  CountCache cache(path.string());
  auto cached = cache.get(CountKey{2, CountKind::plain, 8, ""});
  REQUIRE(cached.has_value());
  EnumOptions opt;
  opt.symmetry_reduction = false;
  CHECK(*cached == Enumerator(opt).count_saws(2, 8));
  CHECK(*cached == oracle::count(2, 8));
}

TEST_CASE("SAWC corpus round trip") {
  auto path = scratch("corpus.sawc");
  std::mt19937_64 gen(1);
  auto saws = oracle::all_saws(3, 4);
  std::vector<Path> written;
  {
    CorpusWriter w(path.string());
    for (int i = 0; i < 1000; ++i) {
      const auto& s = saws[gen() % saws.size()];
      written.emplace_back(3, std::vector<Step>(s.begin(), s.end()));
      w.write(written.back());
    }
    w.close();
  }
  CorpusReader r(path.string());
  CHECK(r.declared_count() == 1000);
  CHECK(r.read_all() == written);
}

TEST_CASE("empty corpus and error paths") {
  auto path = scratch("empty.sawc");
  { CorpusWriter w(path.string()); }
  CHECK(fs::file_size(path) == 13);
  CorpusReader r(path.string());
  CHECK(r.declared_count() == 0);
  CHECK_FALSE(r.next().has_value());

  auto bad = scratch("bad.sawc");
  std::ofstream(bad) << "NOPE12345678901";
  CHECK_THROWS_AS(CorpusReader(bad.string()), BadMagic);

  auto cut = scratch("cut.sawc");
  {
    CorpusWriter w(cut.string());
    w.write(Path(2, {0, 0, 2}));
  }
  fs::resize_file(cut, fs::file_size(cut) - 1);
  CorpusReader rc(cut.string());
  CHECK_THROWS_AS(rc.next(), TruncatedRecord);
}

TEST_CASE("corpus of all SAW_4 in d=2 has c_4 records") {
  auto path = scratch("all4.sawc");
  {
    CorpusWriter w(path.string());
    for_each_saw(2, 4, [&](std::span<const Step> s) { w.write(2, s); });
  }
  CorpusReader r(path.string());
  CHECK(r.declared_count() == Enumerator().count_saws(2, 4));
  CHECK(r.read_all().size() == 100);
}

TEST_CASE("run config round trips through its text form") {
  RunConfig cfg;
  cfg.d = 5;
  cfg.seed = 987654321;
  cfg.output_dir = "out dir/with spaces";
  cfg.node_limit = 42;
  cfg.params["trials"] = "100000";
  cfg.params["pattern"] = "+e1,+e2";
  auto text = cfg.to_text();
  CHECK(RunConfig::from_text(text) == cfg);
  CHECK(RunConfig::from_text(text).to_text() == text);

  CHECK_THROWS_AS(RunConfig::from_text("[budgets]\nnode_limit=0\n"), InvalidArgument);
  CHECK_THROWS_AS(RunConfig::from_text("[run]\nbogus=1\n"), InvalidArgument);
  CHECK_THROWS_AS(RunConfig::from_text("[run]\nd=abc\n"), InvalidArgument);
}

TEST_CASE("versioned artifacts never overwrite") {
  auto dir = fs::temp_directory_path() / "sawlab_store_tests" / "artifacts";
  fs::remove_all(dir);
  auto a = write_versioned_artifact(dir.string(), "report", "json", "{}\n");
  auto b = write_versioned_artifact(dir.string(), "report", "json", "{}\n");
  CHECK(a != b);
  CHECK(fs::exists(a + ".meta.json"));
  CHECK(fs::path(b).filename() == "report.v2.json");
}
