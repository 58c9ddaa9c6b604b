// cache.hpp
// Persistent evaluation cache: append-only record log keyed by the circuit
// tensor's canonical hash, with an in-memory index, per-record checksums and
// advisory file locking for cross-process writers.
//
// File layout (all integers little-endian):
//   magic "RLQC" | u32 format version | records...
//   record = u64 key | u32 payload length | payload | u64 FNV-1a(payload)
//   payload = serialized circuit tensor + EvalResult

#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rlqas/circuit.hpp"
#include "rlqas/inner_loop.hpp"

namespace rlqas {

namespace detail {

constexpr char kCacheMagic[4] = {'R', 'L', 'Q', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xff);
}
inline void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back((v >> (8 * i)) & 0xff);
}
inline void put_f64(std::vector<std::uint8_t>& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(buf, bits);
}

struct ByteReader {
  const std::uint8_t* p;
  const std::uint8_t* end;

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n)
      throw std::runtime_error("truncated cache payload");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    p += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    p += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

}  // namespace detail

struct CacheEntry {
  CircuitTensor tensor;
  EvalResult result;
};

inline std::vector<std::uint8_t> serialize_entry(const CacheEntry& e) {
  using namespace detail;
  std::vector<std::uint8_t> buf;
  put_u32(buf, static_cast<std::uint32_t>(e.tensor.num_qubits));
  put_u32(buf, static_cast<std::uint32_t>(e.tensor.gate_axis));
  put_u32(buf, static_cast<std::uint32_t>(e.tensor.max_depth));
  buf.insert(buf.end(), e.tensor.bits.begin(), e.tensor.bits.end());
  put_u32(buf, static_cast<std::uint32_t>(e.result.per_seed.size()));
  for (const SeedResult& s : e.result.per_seed) {
    put_u32(buf, s.seed);
    put_f64(buf, s.final_train_acc);
    put_f64(buf, s.final_test_acc);
    put_f64(buf, s.final_loss);
    put_u32(buf, static_cast<std::uint32_t>(s.trained_params.size()));
    for (double p : s.trained_params) put_f64(buf, p);
  }
  put_f64(buf, e.result.aggregate_test_acc);
  put_f64(buf, e.result.aggregate_train_acc);
  return buf;
}

inline CacheEntry deserialize_entry(const std::vector<std::uint8_t>& buf) {
  detail::ByteReader r{buf.data(), buf.data() + buf.size()};
  CacheEntry e;
  e.tensor.num_qubits = static_cast<int>(r.u32());
  e.tensor.gate_axis = static_cast<int>(r.u32());
  e.tensor.max_depth = static_cast<int>(r.u32());
  const std::size_t nbits = static_cast<std::size_t>(e.tensor.num_qubits) *
                            e.tensor.gate_axis * e.tensor.max_depth;
  r.need(nbits);
  e.tensor.bits.assign(r.p, r.p + nbits);
  r.p += nbits;
  const std::uint32_t nseeds = r.u32();
  for (std::uint32_t i = 0; i < nseeds; ++i) {
    SeedResult s;
    s.seed = r.u32();
    s.final_train_acc = r.f64();
    s.final_test_acc = r.f64();
    s.final_loss = r.f64();
    const std::uint32_t np = r.u32();
    s.trained_params.resize(np);
    for (std::uint32_t j = 0; j < np; ++j) s.trained_params[j] = r.f64();
    e.result.per_seed.push_back(std::move(s));
  }
  e.result.aggregate_test_acc = r.f64();
  e.result.aggregate_train_acc = r.f64();
  return e;
}

class EvalCache {
 public:
  explicit EvalCache(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open cache file: " + path_);
    struct stat st{};
    if (::fstat(fd_, &st) != 0)
      throw std::runtime_error("cannot stat cache file: " + path_);
    if (st.st_size == 0) {
      lock(LOCK_EX);
      // re-check under the lock; another process may have won the race
      if (file_size() == 0) {
        std::vector<std::uint8_t> header(detail::kCacheMagic,
                                         detail::kCacheMagic + 4);
        detail::put_u32(header, detail::kCacheVersion);
        write_all(header);
      }
      unlock();
    }
    read_offset_ = 8;  // magic + version
    refresh();
  }

  ~EvalCache() {
    if (fd_ >= 0) ::close(fd_);
  }

  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  const std::string& path() const { return path_; }
  std::size_t size() const { return index_.size(); }

  const CacheEntry* find(std::uint64_t key) {
    auto it = index_.find(key);
    if (it != index_.end()) return &it->second;
    // another process may have appended since our last read
    lock(LOCK_SH);
    refresh();
    unlock();
    it = index_.find(key);
    return it == index_.end() ? nullptr : &it->second;
  }

  // First write wins: a key, once stored, always returns the same result.
  const CacheEntry& put(std::uint64_t key, CacheEntry entry) {
    lock(LOCK_EX);
    refresh();
    auto it = index_.find(key);
    if (it == index_.end()) {
      const std::vector<std::uint8_t> payload = serialize_entry(entry);
      std::vector<std::uint8_t> record;
      detail::put_u64(record, key);
      detail::put_u32(record, static_cast<std::uint32_t>(payload.size()));
      record.insert(record.end(), payload.begin(), payload.end());
      detail::put_u64(record, fnv1a(payload.data(), payload.size()));
      if (::lseek(fd_, 0, SEEK_END) < 0)
        throw std::runtime_error("cache seek failed");
      write_all(record);
      read_offset_ = file_size();
      it = index_.emplace(key, std::move(entry)).first;
    }
    unlock();
    return it->second;
  }

  // All entries, for offline analysis.
  const std::unordered_map<std::uint64_t, CacheEntry>& entries() {
    lock(LOCK_SH);
    refresh();
    unlock();
    return index_;
  }

 private:
  void lock(int op) {
    if (::flock(fd_, op) != 0) throw std::runtime_error("cache lock failed");
  }
  void unlock() { ::flock(fd_, LOCK_UN); }

  off_t file_size() const {
    struct stat st{};
    if (::fstat(fd_, &st) != 0)
      throw std::runtime_error("cannot stat cache file");
    return st.st_size;
  }

  void write_all(const std::vector<std::uint8_t>& buf) {
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(fd_, buf.data() + off, buf.size() - off);
      if (n <= 0) throw std::runtime_error("cache write failed");
      off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw std::runtime_error("cache fsync failed");
  }

  // Reads records appended since the last refresh. A truncated final record
  // (crashed writer) is ignored; a corrupt checksum is an error.
  void refresh() {
    const off_t size = file_size();
    if (size < 8) throw std::runtime_error("cache file too short: " + path_);
    if (read_offset_ == 8) {
      std::uint8_t header[8];
      pread_all(header, 8, 0);
      if (std::memcmp(header, detail::kCacheMagic, 4) != 0)
        throw std::runtime_error("bad cache magic in " + path_);
    }
    while (read_offset_ + 12 <= size) {
      std::uint8_t head[12];
      pread_all(head, 12, read_offset_);
      detail::ByteReader hr{head, head + 12};
      const std::uint64_t key = hr.u64();
      const std::uint32_t len = hr.u32();
      if (read_offset_ + 12 + len + 8 > static_cast<std::uint64_t>(size))
        break;  // torn tail
      std::vector<std::uint8_t> payload(len);
      pread_all(payload.data(), len, read_offset_ + 12);
      std::uint8_t sumbuf[8];
      pread_all(sumbuf, 8, read_offset_ + 12 + len);
      detail::ByteReader sr{sumbuf, sumbuf + 8};
      if (sr.u64() != fnv1a(payload.data(), payload.size()))
        throw std::runtime_error("cache checksum mismatch in " + path_);
      index_.emplace(key, deserialize_entry(payload));
      read_offset_ += 12 + len + 8;
    }
  }

  void pread_all(std::uint8_t* dst, std::size_t n, off_t off) {
    std::size_t got = 0;
    while (got < n) {
      const ssize_t r = ::pread(fd_, dst + got, n - got, off + got);
      if (r <= 0) throw std::runtime_error("cache read failed");
      got += static_cast<std::size_t>(r);
    }
  }

  std::string path_;
  int fd_ = -1;
  off_t read_offset_ = 8;
  std::unordered_map<std::uint64_t, CacheEntry> index_;
};

// On hit returns the stored result; on miss trains, stores, returns.
inline EvalResult cached_evaluate(const CircuitTensor& tensor,
                                  const Dataset& data, const OptConfig& cfg,
                                  EvalCache& cache) {
  const std::uint64_t key = canonical_hash(tensor);
  if (const CacheEntry* hit = cache.find(key)) return hit->result;
  CacheEntry entry;
  entry.tensor = tensor;
  entry.result = train_vqc(decode(tensor), data, cfg);
  return cache.put(key, std::move(entry)).result;
}

}  // namespace rlqas
