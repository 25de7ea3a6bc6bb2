#include "sawlab/store.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <boost/crc.hpp>

#include "json.hpp"

namespace sawlab {

namespace {

using json = nlohmann::json;

std::string crc_hex(const std::string& payload) {
  boost::crc_32_type crc;
  crc.process_bytes(payload.data(), payload.size());
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc.checksum());
  return buf;
}

std::string payload_of(const CountKey& key, const std::string& count) {
  return std::to_string(key.d) + "|" + to_string(key.kind) + "|" + std::to_string(key.n) +
         "|" + key.key + "|" + count;
}

bool is_decimal(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// RAII advisory lock on a sidecar lock file.
class FileLock {
 public:
  explicit FileLock(const std::string& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

bool get_bytes(std::istream& in, char* buf, std::size_t n) {
  in.read(buf, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint64_t le_value(const char* b, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

}  // namespace

// --- CountCache --------------------------------------------------------------

CountCache::CountCache(std::string path) : path_(std::move(path)) { reload(); }

std::string CountCache::format_line(const CountKey& key, const BigCount& value) {
  std::string count = to_decimal(value);
  json j;
  j["d"] = key.d;
  j["kind"] = to_string(key.kind);
  j["n"] = key.n;
  j["key"] = key.key;
  j["count"] = count;
  j["crc"] = crc_hex(payload_of(key, count));
  return j.dump();
}

std::pair<CountKey, BigCount> CountCache::parse_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw CorruptCache("unparseable cache line");
  try {
    CountKey key;
    key.d = j.at("d").get<int>();
    key.kind = count_kind_from_string(j.at("kind").get<std::string>());
    key.n = j.at("n").get<int>();
    key.key = j.at("key").get<std::string>();
    auto count = j.at("count").get<std::string>();
    if (!is_decimal(count)) throw CorruptCache("count is not a decimal string");
    if (j.contains("crc") && j["crc"].get<std::string>() != crc_hex(payload_of(key, count))) {
      throw CorruptCache("checksum mismatch");
    }
    return {key, BigCount(count)};
  } catch (const CorruptCache&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptCache(std::string("malformed cache line: ") + e.what());
  }
}

std::size_t CountCache::read_from(std::uintmax_t offset) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return 0;
  in.seekg(static_cast<std::streamoff>(offset));
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t skipped = 0;
  std::size_t start = 0;
  for (;;) {
    auto nl = data.find('\n', start);
    if (nl == std::string::npos) break;  // incomplete trailing line
    std::string line = data.substr(start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    try {
      auto [key, value] = parse_line(line);
      entries_[key] = value;
    } catch (const CorruptCache& e) {
      ++skipped;
      std::string msg = "cache " + path_ + ": skipped line (" + e.what() + ")";
      warnings_.push_back(msg);
      std::cerr << "warning: " << msg << '\n';
    }
  }
  consumed_ = offset + start;
  return skipped;
}

std::size_t CountCache::reload() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  warnings_.clear();
  consumed_ = 0;
  return read_from(0);
}

std::optional<BigCount> CountCache::get(const CountKey& key) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  read_from(consumed_);  // pick up lines appended by other processes
  it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  return std::nullopt;
}

void CountCache::put(const CountKey& key, const BigCount& value) {
  std::lock_guard lock(mutex_);
  auto parent = std::filesystem::path(path_).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  FileLock file_lock(path_ + ".lock");
  read_from(consumed_);
  auto it = entries_.find(key);
  if (it != entries_.end() && it->second == value) return;
  {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << format_line(key, value) << '\n';
  }
  entries_[key] = value;
  consumed_ = std::filesystem::file_size(path_);
}

std::size_t CountCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string resolve_cache_path(const std::string& fallback) {
  if (const char* env = std::getenv("SAWLAB_CACHE"); env != nullptr && *env != '\0') {
    return env;
  }
  return fallback;
}

// --- corpus ------------------------------------------------------------------

CorpusWriter::CorpusWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw InvalidArgument("cannot open corpus for writing: " + path);
  out_.write("SAWC", 4);
  out_.put(static_cast<char>(kCorpusVersion));
  put_u64(out_, 0);
}

CorpusWriter::~CorpusWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CorpusWriter::write(const Path& path) { write(path.dimension(), path.steps()); }

void CorpusWriter::write(int d, std::span<const Step> steps) {
  if (closed_) throw InvalidArgument("corpus writer already closed");
  if (d < 1 || d > 255) throw InvalidArgument("dimension does not fit a byte");
  out_.put(static_cast<char>(d));
  put_u32(out_, static_cast<std::uint32_t>(steps.size()));
  out_.write(reinterpret_cast<const char*>(steps.data()), static_cast<std::streamsize>(steps.size()));
  ++count_;
}

void CorpusWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(5);
  put_u64(out_, count_);
  out_.close();
}

CorpusReader::CorpusReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw InvalidArgument("cannot open corpus: " + path);
  char header[13];
  if (!get_bytes(in_, header, 4) || std::string(header, 4) != "SAWC") {
    throw BadMagic("not a SAWC corpus: " + path);
  }
  if (!get_bytes(in_, header, 9)) throw TruncatedRecord("corpus header truncated");
  version_ = static_cast<std::uint8_t>(header[0]);
  if (version_ != kCorpusVersion) throw BadMagic("unsupported corpus version");
  declared_ = le_value(header + 1, 8);
}

std::optional<Path> CorpusReader::next() {
  if (read_ == declared_) return std::nullopt;
  char head[5];
  if (!get_bytes(in_, head, 5)) {
    throw TruncatedRecord("record " + std::to_string(read_) + " header truncated");
  }
  int d = static_cast<unsigned char>(head[0]);
  auto length = static_cast<std::size_t>(le_value(head + 1, 4));
  std::vector<Step> steps(length);
  if (!get_bytes(in_, reinterpret_cast<char*>(steps.data()), length)) {
    throw TruncatedRecord("record " + std::to_string(read_) + " body truncated");
  }
  ++read_;
  return Path(d, std::move(steps));
}

std::vector<Path> CorpusReader::read_all() {
  std::vector<Path> out;
  while (auto p = next()) out.push_back(std::move(*p));
  return out;
}

// --- RunConfig ---------------------------------------------------------------

void RunConfig::validate() const {
  if (d < 1 || d > 8) throw InvalidArgument("config: d must be in [1, 8]");
  if (node_limit == 0 || memory_hint_mb == 0 || rejection_cap == 0) {
    throw InvalidArgument("config: budgets must be positive");
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "[run]\n"
      << "d=" << d << "\n"
      << "seed=" << seed << "\n"
      << "output_dir=" << output_dir << "\n"
      << "cache_path=" << cache_path << "\n"
      << "workers=" << workers << "\n"
      << "\n[budgets]\n"
      << "node_limit=" << node_limit << "\n"
      << "memory_hint_mb=" << memory_hint_mb << "\n"
      << "rejection_cap=" << rejection_cap << "\n"
      << "\n[params]\n";
  for (const auto& [k, v] : params) out << k << "=" << v << "\n";
  return out.str();
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  auto number = [&](const std::string& v) -> std::uint64_t {
    try {
      std::size_t used = 0;
      auto x = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": bad number '" + v + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line[first] == '[') {
      auto close = line.find(']', first);
      if (close == std::string::npos) throw InvalidArgument("config line " + std::to_string(line_no) + ": bad section");
      section = line.substr(first + 1, close - first - 1);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = line.substr(first, eq - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    if (section == "run") {
      if (key == "d") cfg.d = static_cast<int>(number(value));
      else if (key == "seed") cfg.seed = number(value);
      else if (key == "output_dir") cfg.output_dir = value;
      else if (key == "cache_path") cfg.cache_path = value;
      else if (key == "workers") cfg.workers = static_cast<unsigned>(number(value));
      else throw InvalidArgument("config: unknown key run." + key);
    } else if (section == "budgets") {
      if (key == "node_limit") cfg.node_limit = number(value);
      else if (key == "memory_hint_mb") cfg.memory_hint_mb = number(value);
      else if (key == "rejection_cap") cfg.rejection_cap = number(value);
      else throw InvalidArgument("config: unknown key budgets." + key);
    } else if (section == "params") {
      cfg.params[key] = value;
    } else {
      throw InvalidArgument("config: key outside a known section: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  out << to_text();
}

// --- artifacts ---------------------------------------------------------------

std::string write_versioned_artifact(const std::string& dir, const std::string& stem,
                                     const std::string& ext, const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (int v = 1;; ++v) {
    fs::path p = fs::path(dir) / (stem + ".v" + std::to_string(v) + "." + ext);
    if (fs::exists(p)) continue;
    {
      std::ofstream out(p, std::ios::binary);
      out << content;
    }
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    json meta;
    meta["artifact"] = p.filename().string();
    meta["written_unix"] = secs;
    std::ofstream(p.string() + ".meta.json") << meta.dump() << '\n';
    return p.string();
  }
}

}  // namespace sawlab
