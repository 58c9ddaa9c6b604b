// circuit.hpp
// Binary 3D tensor encoding of a circuit architecture, ASAP gate placement,
// tensor <-> gate-sequence conversion, complexity metrics, the strongly
// entangling layer benchmark ansatz and a stable canonical hash.

#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlqas/gate.hpp"

namespace rlqas {

// Tensor of shape [Q x (G + Q - 1) x D], flattened row-major in (q, g, d)
// order. Gate axis: 0..2 = Rx/Ry/Rz on that qubit, 3 + t = CNOT with this
// qubit as control and qubit t as target; the diagonal slot [q, 3 + q, d] is
// never set.
struct CircuitTensor {
  std::vector<std::uint8_t> bits;
  int num_qubits = 0;
  int gate_axis = 0;  // G + Q - 1
  int max_depth = 0;

  std::size_t index(int q, int g, int d) const {
    return (static_cast<std::size_t>(q) * gate_axis + g) * max_depth + d;
  }
  std::uint8_t at(int q, int g, int d) const { return bits[index(q, g, d)]; }
  void set(int q, int g, int d) { bits[index(q, g, d)] = 1; }

  bool operator==(const CircuitTensor&) const = default;
};

inline CircuitTensor empty_tensor(int num_qubits, int gate_set_size,
                                  int max_depth) {
  if (num_qubits < 1 || gate_set_size != kNumGateKinds || max_depth < 1)
    throw std::invalid_argument("bad tensor shape");
  CircuitTensor t;
  t.num_qubits = num_qubits;
  t.gate_axis = gate_set_size + num_qubits - 1;
  t.max_depth = max_depth;
  t.bits.assign(static_cast<std::size_t>(num_qubits) * t.gate_axis * max_depth,
                0);
  return t;
}

struct GateSequence {
  std::vector<Gate> gates;
  std::vector<int> qubit_depth;  // per-qubit gate count under ASAP scheduling
  int num_params = 0;

  explicit GateSequence(int num_qubits = 0) : qubit_depth(num_qubits, 0) {}

  int num_qubits() const { return static_cast<int>(qubit_depth.size()); }
  int depth() const {
    return qubit_depth.empty()
               ? 0
               : *std::max_element(qubit_depth.begin(), qubit_depth.end());
  }
};

// ASAP landing depth for a gate: the deepest involved qubit decides.
inline int landing_depth(const GateSequence& seq, const Gate& gate) {
  int d = seq.qubit_depth[gate.qubit];
  if (gate.kind == GateKind::Cnot)
    d = std::max(d, seq.qubit_depth[gate.target]);
  return d;
}

// Appends `gate` and records it in the tensor at its ASAP depth. Legality
// (duplicate rule, depth budget) is the caller's job; depth overflow is still
// rejected here.
inline void place_gate(CircuitTensor& tensor, GateSequence& seq, Gate gate) {
  const int q_count = tensor.num_qubits;
  if (gate.qubit < 0 || gate.qubit >= q_count ||
      (gate.kind == GateKind::Cnot &&
       (gate.target < 0 || gate.target >= q_count)))
    throw std::out_of_range("qubit index out of range");
  const int d = landing_depth(seq, gate);
  if (d >= tensor.max_depth) throw std::runtime_error("depth overflow");
  if (gate.kind == GateKind::Cnot) {
    tensor.set(gate.qubit, kNumGateKinds - 1 + gate.target, d);
    seq.qubit_depth[gate.qubit] = d + 1;
    seq.qubit_depth[gate.target] = d + 1;
  } else {
    tensor.set(gate.qubit, static_cast<int>(gate.kind), d);
    gate.param_index = seq.num_params++;
    seq.qubit_depth[gate.qubit] = d + 1;
  }
  seq.gates.push_back(gate);
}

inline CircuitTensor encode(const GateSequence& seq, int max_depth) {
  CircuitTensor t = empty_tensor(seq.num_qubits(), kNumGateKinds, max_depth);
  GateSequence rebuilt(seq.num_qubits());
  for (const Gate& g : seq.gates) place_gate(t, rebuilt, g);
  return t;
}

// Inverse of the encoding: gates ordered by (depth, control-qubit index),
// parameter indices assigned in that order. Rejects tensors that no ASAP
// placement can produce.
inline GateSequence decode(const CircuitTensor& tensor) {
  GateSequence seq(tensor.num_qubits);
  CircuitTensor check =
      empty_tensor(tensor.num_qubits, kNumGateKinds, tensor.max_depth);
  for (int d = 0; d < tensor.max_depth; ++d)
    for (int q = 0; q < tensor.num_qubits; ++q) {
      Gate gate;
      bool found = false;
      for (int g = 0; g < tensor.gate_axis; ++g) {
        if (!tensor.at(q, g, d)) continue;
        if (found) throw std::runtime_error("two gates at one (qubit, depth)");
        found = true;
        if (g < kNumGateKinds - 1) {
          gate = Gate::rotation(static_cast<GateKind>(g), q);
        } else {
          const int target = g - (kNumGateKinds - 1);
          if (target == q) throw std::runtime_error("CNOT targets its control");
          gate = Gate::cnot(q, target);
        }
      }
      if (!found) continue;
      if (landing_depth(seq, gate) != d)
        throw std::runtime_error("gate placement violates ASAP scheduling");
      place_gate(check, seq, gate);
    }
  if (!(check == tensor)) throw std::runtime_error("malformed circuit tensor");
  return seq;
}

struct CircuitMetrics {
  int gates = 0;
  int params = 0;
  int cnots = 0;
  int depth = 0;

  bool operator==(const CircuitMetrics&) const = default;
};

inline CircuitMetrics metrics(const GateSequence& seq) {
  CircuitMetrics m;
  m.gates = static_cast<int>(seq.gates.size());
  m.params = seq.num_params;
  for (const Gate& g : seq.gates)
    if (g.kind == GateKind::Cnot) ++m.cnots;
  m.depth = seq.depth();
  return m;
}

// Strongly entangling layers: per layer an Rz-Ry-Rz triple on every qubit
// followed by the CNOT ring i -> (i+1) mod Q.
inline GateSequence sel_ansatz(int num_qubits, int layers) {
  if (num_qubits < 2) throw std::invalid_argument("SEL needs >= 2 qubits");
  if (layers < 1) throw std::invalid_argument("layers must be >= 1");
  GateSequence seq(num_qubits);
  for (int l = 0; l < layers; ++l) {
    for (int q = 0; q < num_qubits; ++q) {
      for (GateKind k : {GateKind::Rz, GateKind::Ry, GateKind::Rz}) {
        Gate g = Gate::rotation(k, q, seq.num_params++);
        seq.qubit_depth[q] = landing_depth(seq, g) + 1;
        seq.gates.push_back(g);
      }
    }
    for (int q = 0; q < num_qubits; ++q) {
      Gate g = Gate::cnot(q, (q + 1) % num_qubits);
      const int d = landing_depth(seq, g);
      seq.qubit_depth[g.qubit] = d + 1;
      seq.qubit_depth[g.target] = d + 1;
      seq.gates.push_back(g);
    }
  }
  return seq;
}

// FNV-1a over the canonical (q, g, d) row-major bit flattening.
inline std::uint64_t fnv1a(const std::uint8_t* data, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t canonical_hash(const CircuitTensor& tensor) {
  return fnv1a(tensor.bits.data(), tensor.bits.size());
}

// Plain-text export: one gate per line, `RX q0 p0` / `CNOT q0 q1`.
inline std::string export_gate_list(const GateSequence& seq) {
  std::ostringstream os;
  for (const Gate& g : seq.gates) {
    if (g.kind == GateKind::Cnot)
      os << "CNOT q" << g.qubit << " q" << g.target << "\n";
    else
      os << gate_name(g.kind) << " q" << g.qubit << " p" << g.param_index
         << "\n";
  }
  return os.str();
}

inline GateSequence parse_gate_list(const std::string& text, int num_qubits) {
  GateSequence seq(num_qubits);
  std::istringstream is(text);
  std::string line;
  auto qubit_of = [](const std::string& tok) {
    if (tok.size() < 2 || tok[0] != 'q')
      throw std::runtime_error("bad qubit token: " + tok);
    return std::stoi(tok.substr(1));
  };
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, a, b;
    ls >> name >> a >> b;
    Gate gate;
    if (name == "CNOT") {
      gate = Gate::cnot(qubit_of(a), qubit_of(b));
    } else if (name == "RX" || name == "RY" || name == "RZ") {
      const GateKind k = name == "RX"   ? GateKind::Rx
                         : name == "RY" ? GateKind::Ry
                                        : GateKind::Rz;
      gate = Gate::rotation(k, qubit_of(a));
    } else {
      throw std::runtime_error("unknown gate: " + name);
    }
    if (gate.is_parameterized()) gate.param_index = seq.num_params++;
    const int d = landing_depth(seq, gate);
    seq.qubit_depth[gate.qubit] = d + 1;
    if (gate.kind == GateKind::Cnot) seq.qubit_depth[gate.target] = d + 1;
    seq.gates.push_back(gate);
  }
  return seq;
}

}  // namespace rlqas
