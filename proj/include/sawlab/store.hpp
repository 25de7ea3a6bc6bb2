#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sawlab/enumerate.hpp"
#include "sawlab/lattice.hpp"

namespace sawlab {

// Append-only JSON-lines count cache. Each line is
//   {"d":5,"kind":"plain","n":3,"key":"","count":"810","crc":"1a2b3c4d"}
// with big integers as decimal strings. The crc field (CRC-32 of the other
// fields) lets readers skip damaged lines. Writers take an advisory lock on
// "<path>.lock"; readers only consume newline-terminated lines, so a reader
// racing an append sees a consistent prefix.
class CountCache {
 public:
  explicit CountCache(std::string path);

  const std::string& path() const noexcept { return path_; }

  // Re-reads the file. Returns the number of lines skipped as corrupt.
  std::size_t reload();

  std::optional<BigCount> get(const CountKey& key);
  void put(const CountKey& key, const BigCount& value);

  std::size_t size() const;
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  static std::string format_line(const CountKey& key, const BigCount& value);
  // Throws CorruptCache when the line does not parse or fails its checksum.
  static std::pair<CountKey, BigCount> parse_line(const std::string& line);

 private:
  std::string path_;
  std::map<CountKey, BigCount> entries_;
  std::vector<std::string> warnings_;
  std::uintmax_t consumed_ = 0;  // bytes already parsed
  mutable std::mutex mutex_;

  std::size_t read_from(std::uintmax_t offset);
};

// Resolves the cache path: SAWLAB_CACHE if set, else `fallback`.
std::string resolve_cache_path(const std::string& fallback);

// --- SAWC path corpus --------------------------------------------------------
//
// File: "SAWC" | u8 version (=1) | u64 record count | records.
// Record: u8 d | u32 length | length bytes of direction codes.
// Integers are little-endian.

inline constexpr std::uint8_t kCorpusVersion = 1;

class CorpusWriter {
 public:
  explicit CorpusWriter(const std::string& path);
  ~CorpusWriter();
  CorpusWriter(const CorpusWriter&) = delete;
  CorpusWriter& operator=(const CorpusWriter&) = delete;

  void write(const Path& path);
  void write(int d, std::span<const Step> steps);
  std::uint64_t count() const noexcept { return count_; }
  // Patches the record count into the header. Idempotent.
  void close();

 private:
  std::ofstream out_;
  std::uint64_t count_ = 0;
  bool closed_ = false;
};

class CorpusReader {
 public:
  explicit CorpusReader(const std::string& path);

  std::uint64_t declared_count() const noexcept { return declared_; }
  std::uint8_t version() const noexcept { return version_; }
  // Next record, or nullopt at the end. Throws TruncatedRecord.
  std::optional<Path> next();
  std::vector<Path> read_all();

 private:
  std::ifstream in_;
  std::uint64_t declared_ = 0;
  std::uint64_t read_ = 0;
  std::uint8_t version_ = 0;
};

// --- run configuration -------------------------------------------------------

// Flat key=value file with [sections]:
//   [run]      d, seed, output_dir, cache_path, workers
//   [budgets]  node_limit, memory_hint_mb, rejection_cap
//   [params]   free-form command parameters
struct RunConfig {
  int d = 2;
  std::uint64_t seed = 1;
  std::string output_dir = "sawlab_out";
  std::string cache_path = "sawlab_cache.jsonl";
  unsigned workers = 0;
  std::uint64_t node_limit = 2'000'000'000ULL;
  std::uint64_t memory_hint_mb = 1024;
  std::uint64_t rejection_cap = 1'000'000;
  std::map<std::string, std::string> params;

  void validate() const;
  std::string to_text() const;
  static RunConfig from_text(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  bool operator==(const RunConfig&) const = default;
};

// Writes `content` to dir/stem.vN.ext for the first unused N, plus a
// dir/stem.vN.ext.meta.json sidecar holding the timestamp. Returns the path.
std::string write_versioned_artifact(const std::string& dir, const std::string& stem,
                                     const std::string& ext, const std::string& content);

}  // namespace sawlab
