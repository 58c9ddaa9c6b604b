#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "rlqas/circuit.hpp"
#include "rlqas/random.hpp"

using namespace rlqas;

namespace {

// Random legal sequence builder shared by the property tests.
GateSequence random_sequence(int qubits, int max_depth, int max_gates,
                             CircuitTensor& tensor, Rng& rng) {
  tensor = empty_tensor(qubits, kNumGateKinds, max_depth);
  GateSequence seq(qubits);
  for (int g = 0; g < max_gates; ++g) {
    const int kind = static_cast<int>(rng.uniform_index(qubits >= 2 ? 4 : 3));
    Gate gate;
    if (kind == 3) {
      const int c = static_cast<int>(rng.uniform_index(qubits));
      int t = static_cast<int>(rng.uniform_index(qubits - 1));
      if (t >= c) ++t;
      gate = Gate::cnot(c, t);
    } else {
      gate = Gate::rotation(static_cast<GateKind>(kind),
                            static_cast<int>(rng.uniform_index(qubits)));
    }
    if (landing_depth(seq, gate) >= max_depth) continue;
    place_gate(tensor, seq, gate);
  }
  return seq;
}

// Brute-force depth: longest chain of gates linked by shared qubits.
int brute_force_depth(const std::vector<Gate>& gates, int qubits) {
  std::vector<int> depth_of(gates.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    int d = 0;
    for (std::size_t j = 0; j < i; ++j) {
      const bool linked = gates[j].touches(gates[i].qubit) ||
                          (gates[i].target >= 0 &&
                           gates[j].touches(gates[i].target));
      if (linked) d = std::max(d, depth_of[j]);
    }
    depth_of[i] = d + 1;
    best = std::max(best, depth_of[i]);
  }
  (void)qubits;
  return best;
}

}  // namespace

TEST_CASE("empty tensor shapes") {
  const CircuitTensor a = empty_tensor(2, 4, 3);
  CHECK(a.bits.size() == 2u * 5u * 3u);
  const CircuitTensor b = empty_tensor(5, 4, 7);
  CHECK(b.bits.size() == 5u * 8u * 7u);
  for (auto bit : b.bits) CHECK(bit == 0);
  CHECK_THROWS(empty_tensor(0, 4, 3));
  CHECK_THROWS(empty_tensor(2, 3, 3));
}

TEST_CASE("ASAP gate placement") {
  CircuitTensor t = empty_tensor(2, 4, 3);
  GateSequence seq(2);
  SUBCASE("first rotation lands at depth 0") {
    place_gate(t, seq, Gate::rotation(GateKind::Rx, 0));
    CHECK(t.at(0, 0, 0) == 1);
    CHECK(seq.qubit_depth[0] == 1);
    CHECK(seq.qubit_depth[1] == 0);
    CHECK(seq.num_params == 1);
  }
  SUBCASE("CNOT lands at the max of the involved depths") {
    place_gate(t, seq, Gate::rotation(GateKind::Rx, 0));
    place_gate(t, seq, Gate::cnot(0, 1));
    CHECK(t.at(0, 3 + 1, 1) == 1);  // control row, column 3 + target
    CHECK(seq.qubit_depth[0] == 2);
    CHECK(seq.qubit_depth[1] == 2);
  }
  SUBCASE("depth overflow rejected") {
    for (GateKind k : {GateKind::Rx, GateKind::Ry, GateKind::Rz})
      place_gate(t, seq, Gate::rotation(k, 0));
    CHECK_THROWS(place_gate(t, seq, Gate::rotation(GateKind::Rx, 0)));
  }
  SUBCASE("qubit bounds") {
    CHECK_THROWS(place_gate(t, seq, Gate::rotation(GateKind::Rx, 2)));
  }
}

TEST_CASE("encode/decode bijection on random legal sequences") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int qubits = 2 + static_cast<int>(rng.uniform_index(4));
    const int max_depth = 2 + static_cast<int>(rng.uniform_index(5));
    CircuitTensor tensor;
    const GateSequence seq =
        random_sequence(qubits, max_depth, 10, tensor, rng);
    const GateSequence decoded = decode(tensor);
    CHECK(metrics(decoded) == metrics(seq));
    CHECK(encode(decoded, max_depth) == tensor);
    // parameter indices follow (depth, qubit) decode order
    int expect = 0;
    for (const Gate& g : decoded.gates)
      if (g.is_parameterized()) CHECK(g.param_index == expect++);
  }
}

TEST_CASE("decode rejects malformed tensors") {
  CircuitTensor t = empty_tensor(2, 4, 3);
  SUBCASE("two gates at one (qubit, depth)") {
    t.set(0, 0, 0);
    t.set(0, 1, 0);
    CHECK_THROWS(decode(t));
  }
  SUBCASE("floating gate at an unreachable depth") {
    t.set(0, 0, 2);
    CHECK_THROWS(decode(t));
  }
}

TEST_CASE("metrics") {
  SUBCASE("empty circuit") {
    CHECK(metrics(GateSequence(2)) == CircuitMetrics{0, 0, 0, 0});
  }
  SUBCASE("four-gate circuit with one CNOT at depth 3") {
    CircuitTensor t = empty_tensor(2, 4, 4);
    GateSequence seq(2);
    place_gate(t, seq, Gate::cnot(0, 1));
    place_gate(t, seq, Gate::rotation(GateKind::Ry, 0));
    place_gate(t, seq, Gate::rotation(GateKind::Rx, 1));
    place_gate(t, seq, Gate::rotation(GateKind::Ry, 1));
    const CircuitMetrics m = metrics(seq);
    CHECK(m.gates == 4);
    CHECK(m.params == 3);
    CHECK(m.cnots == 1);
    CHECK(m.depth == 3);
  }
  SUBCASE("three gates, one CNOT, depth 2") {
    CircuitTensor t = empty_tensor(2, 4, 4);
    GateSequence seq(2);
    place_gate(t, seq, Gate::rotation(GateKind::Ry, 0));
    place_gate(t, seq, Gate::rotation(GateKind::Ry, 1));
    place_gate(t, seq, Gate::cnot(0, 1));
    const CircuitMetrics m = metrics(seq);
    CHECK(m.gates == 3);
    CHECK(m.params == 2);
    CHECK(m.cnots == 1);
    CHECK(m.depth == 2);
  }
}

TEST_CASE("ASAP depth equals brute-force longest chain") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int qubits = 2 + static_cast<int>(rng.uniform_index(3));
    CircuitTensor tensor;
    const GateSequence seq = random_sequence(qubits, 8, 6, tensor, rng);
    CHECK(metrics(seq).depth == brute_force_depth(seq.gates, qubits));
  }
}

TEST_CASE("SEL ansatz structural counts match the published table") {
  struct Case {
    int q, layers, gates, params, cnots;
  };
  for (const Case& c : {Case{2, 1, 8, 6, 2}, Case{2, 2, 16, 12, 4},
                        Case{2, 3, 24, 18, 6}, Case{5, 1, 20, 15, 5},
                        Case{5, 2, 40, 30, 10}}) {
    const GateSequence seq = sel_ansatz(c.q, c.layers);
    const CircuitMetrics m = metrics(seq);
    CHECK(m.gates == c.gates);
    CHECK(m.params == c.params);
    CHECK(m.cnots == c.cnots);
  }
  SUBCASE("Q=2 ring degenerates to the two ordered CNOTs") {
    const GateSequence seq = sel_ansatz(2, 1);
    CHECK(seq.gates[6].same_as(Gate::cnot(0, 1)));
    CHECK(seq.gates[7].same_as(Gate::cnot(1, 0)));
  }
  CHECK_THROWS(sel_ansatz(1, 1));
}

TEST_CASE("canonical hash") {
  SUBCASE("empty tensor constant is pinned") {
    // FNV-1a of 2*5*4 zero bytes; frozen from an independent computation
    const CircuitTensor t = empty_tensor(2, 4, 4);
    CHECK(canonical_hash(t) == 0x40d69e0cf0f65c45ULL);
  }
  SUBCASE("equal tensors hash equal, round trip preserves the key") {
    Rng rng(5);
    CircuitTensor tensor;
    random_sequence(3, 4, 6, tensor, rng);
    const CircuitTensor again = encode(decode(tensor), tensor.max_depth);
    CHECK(canonical_hash(tensor) == canonical_hash(again));
  }
  SUBCASE("no collisions over random distinct pairs") {
    Rng rng(23);
    std::set<std::vector<std::uint8_t>> seen_bits;
    std::set<std::uint64_t> seen_hashes;
    int unique = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      CircuitTensor tensor;
      random_sequence(3, 5, 8, tensor, rng);
      if (!seen_bits.insert(tensor.bits).second) continue;
      ++unique;
      CHECK(seen_hashes.insert(canonical_hash(tensor)).second);
    }
    CHECK(unique > 5000);
  }
}

TEST_CASE("gate-list export and parse round trip") {
  CircuitTensor t = empty_tensor(2, 4, 4);
  GateSequence seq(2);
  place_gate(t, seq, Gate::cnot(0, 1));
  place_gate(t, seq, Gate::rotation(GateKind::Ry, 0));
  place_gate(t, seq, Gate::rotation(GateKind::Rx, 1));
  const std::string text = export_gate_list(seq);
  CHECK(text == "CNOT q0 q1\nRY q0 p0\nRX q1 p1\n");
  const GateSequence parsed = parse_gate_list(text, 2);
  CHECK(metrics(parsed) == metrics(seq));
  CHECK(encode(parsed, 4) == t);
}
