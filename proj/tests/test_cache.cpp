// Evaluation cache: binary round trips, persistence across reopen,
// first-write-wins semantics, torn-tail tolerance and corruption detection.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rlqas/cache.hpp"
#include "rlqas/circuit.hpp"
#include "rlqas/dataset.hpp"
#include "rlqas/inner_loop.hpp"

using namespace rlqas;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name) {
    path = fs::temp_directory_path() /
           (name + "." + std::to_string(::getpid()) + ".bin");
    fs::remove(path);
  }
  ~TempFile() { fs::remove(path); }
  std::string str() const { return path.string(); }
};

CacheEntry sample_entry(int qubits, const std::vector<Gate>& gates,
                        double acc) {
  CacheEntry e;
  e.tensor = empty_tensor(qubits, kNumGateKinds, 4);
  GateSequence seq(qubits);
  for (const Gate& g : gates) place_gate(e.tensor, seq, g);
  SeedResult s;
  s.seed = 1;
  s.final_train_acc = acc;
  s.final_test_acc = acc;
  s.final_loss = 0.25;
  s.trained_params = {0.5, -1.25};
  e.result.per_seed = {s};
  e.result.aggregate_test_acc = acc;
  e.result.aggregate_train_acc = acc;
  return e;
}

}  // namespace

TEST_CASE("entry serialization round trip") {
  const CacheEntry e =
      sample_entry(2, {Gate::rotation(GateKind::Ry, 0), Gate::cnot(0, 1)},
                   0.9375);
  const std::vector<std::uint8_t> buf = serialize_entry(e);
  const CacheEntry back = deserialize_entry(buf);
  CHECK(back.tensor == e.tensor);
  REQUIRE(back.result.per_seed.size() == 1);
  CHECK(back.result.per_seed[0].seed == 1);
  CHECK(back.result.per_seed[0].final_test_acc == 0.9375);
  CHECK(back.result.per_seed[0].trained_params ==
        e.result.per_seed[0].trained_params);
  CHECK(back.result.aggregate_test_acc == e.result.aggregate_test_acc);

  SUBCASE("truncated payload rejected") {
    std::vector<std::uint8_t> cut(buf.begin(), buf.end() - 5);
    CHECK_THROWS(deserialize_entry(cut));
  }
}

TEST_CASE("put and find through one handle") {
  TempFile f("rlqas_cache_basic");
  EvalCache cache(f.str());
  CHECK(cache.size() == 0);
  const CacheEntry e =
      sample_entry(2, {Gate::rotation(GateKind::Rx, 0)}, 0.5);
  const std::uint64_t key = canonical_hash(e.tensor);
  CHECK(cache.find(key) == nullptr);
  cache.put(key, e);
  CHECK(cache.size() == 1);
  const CacheEntry* hit = cache.find(key);
  REQUIRE(hit != nullptr);
  CHECK(hit->tensor == e.tensor);
  CHECK(hit->result.aggregate_test_acc == 0.5);
}

TEST_CASE("entries persist across reopen") {
  TempFile f("rlqas_cache_reopen");
  const CacheEntry a =
      sample_entry(2, {Gate::rotation(GateKind::Ry, 0)}, 0.75);
  const CacheEntry b = sample_entry(2, {Gate::cnot(1, 0)}, 0.25);
  {
    EvalCache cache(f.str());
    cache.put(canonical_hash(a.tensor), a);
    cache.put(canonical_hash(b.tensor), b);
  }
  EvalCache cache(f.str());
  CHECK(cache.size() == 2);
  const CacheEntry* hit = cache.find(canonical_hash(b.tensor));
  REQUIRE(hit != nullptr);
  CHECK(hit->result.aggregate_test_acc == 0.25);
  CHECK(hit->tensor == b.tensor);
}

TEST_CASE("first write wins") {
  TempFile f("rlqas_cache_first");
  EvalCache cache(f.str());
  const CacheEntry first =
      sample_entry(2, {Gate::rotation(GateKind::Rz, 1)}, 0.6);
  CacheEntry second = first;
  second.result.aggregate_test_acc = 0.99;
  const std::uint64_t key = canonical_hash(first.tensor);
  cache.put(key, first);
  const CacheEntry& stored = cache.put(key, second);
  CHECK(stored.result.aggregate_test_acc == 0.6);
  CHECK(cache.size() == 1);
  // and the duplicate wrote nothing: reopening sees one record
  EvalCache reread(f.str());
  CHECK(reread.size() == 1);
}

TEST_CASE("two handles on the same file observe each other") {
  TempFile f("rlqas_cache_pair");
  EvalCache writer(f.str());
  EvalCache reader(f.str());
  const CacheEntry e =
      sample_entry(2, {Gate::rotation(GateKind::Ry, 1)}, 0.8);
  const std::uint64_t key = canonical_hash(e.tensor);
  CHECK(reader.find(key) == nullptr);
  writer.put(key, e);
  const CacheEntry* hit = reader.find(key);  // refresh on miss
  REQUIRE(hit != nullptr);
  CHECK(hit->result.aggregate_test_acc == 0.8);
}

TEST_CASE("torn tail is tolerated, checksum corruption is not") {
  TempFile f("rlqas_cache_torn");
  const CacheEntry e =
      sample_entry(2, {Gate::rotation(GateKind::Rx, 1)}, 0.7);
  {
    EvalCache cache(f.str());
    cache.put(canonical_hash(e.tensor), e);
  }
  const auto full = fs::file_size(f.path);
  SUBCASE("truncated final record is skipped") {
    fs::resize_file(f.path, full - 9);
    EvalCache cache(f.str());
    CHECK(cache.size() == 0);  // torn record ignored, file still readable
  }
  SUBCASE("flipped payload byte fails the checksum") {
    std::fstream io(f.path, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(static_cast<std::streamoff>(full) - 12);
    char byte;
    io.seekg(static_cast<std::streamoff>(full) - 12);
    io.get(byte);
    io.seekp(static_cast<std::streamoff>(full) - 12);
    byte = static_cast<char>(byte ^ 0x40);
    io.put(byte);
    io.close();
    CHECK_THROWS(EvalCache(f.str()));
  }
  SUBCASE("bad magic rejected") {
    std::fstream io(f.path, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(0);
    io.put('X');
    io.close();
    CHECK_THROWS(EvalCache(f.str()));
  }
}

TEST_CASE("cached_evaluate trains once per canonical circuit") {
  TempFile f("rlqas_cache_eval");
  const Dataset d = load_iris("data/iris.txt", {{0, 1}}, 42);
  OptConfig cfg;
  cfg.epochs = 30;
  CircuitTensor t = empty_tensor(2, kNumGateKinds, 4);
  GateSequence seq(2);
  place_gate(t, seq, Gate::rotation(GateKind::Ry, 0));
  place_gate(t, seq, Gate::cnot(0, 1));

  EvalCache cache(f.str());
  const EvalResult first = cached_evaluate(t, d, cfg, cache);
  CHECK(cache.size() == 1);
  const EvalResult second = cached_evaluate(t, d, cfg, cache);
  CHECK(cache.size() == 1);
  CHECK(first.aggregate_test_acc == second.aggregate_test_acc);
  REQUIRE(first.per_seed.size() == second.per_seed.size());
  for (std::size_t i = 0; i < first.per_seed.size(); ++i)
    CHECK(first.per_seed[i].trained_params ==
          second.per_seed[i].trained_params);

  SUBCASE("decode/encode round trip shares the key") {
    const CircuitTensor again = encode(decode(t), t.max_depth);
    CHECK(canonical_hash(again) == canonical_hash(t));
    cached_evaluate(again, d, cfg, cache);
    CHECK(cache.size() == 1);
  }
  SUBCASE("a different circuit adds a record") {
    CircuitTensor t2 = empty_tensor(2, kNumGateKinds, 4);
    GateSequence s2(2);
    place_gate(t2, s2, Gate::rotation(GateKind::Rx, 0));
    cached_evaluate(t2, d, cfg, cache);
    CHECK(cache.size() == 2);
  }
}
