// gate.hpp
// Gate set for the circuit search: single-qubit rotations Rx/Ry/Rz and CNOT.

#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace rlqas {

enum class GateKind : int { Rx = 0, Ry = 1, Rz = 2, Cnot = 3 };

constexpr int kNumGateKinds = 4;

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::Rx: return "RX";
    case GateKind::Ry: return "RY";
    case GateKind::Rz: return "RZ";
    case GateKind::Cnot: return "CNOT";
  }
  return "?";
}

inline bool is_rotation(GateKind k) { return k != GateKind::Cnot; }

struct Gate {
  GateKind kind = GateKind::Rx;
  int qubit = 0;          // rotated qubit, or CNOT control
  int target = -1;        // CNOT target; -1 for rotations
  int param_index = -1;   // index into the parameter vector; -1 for CNOT

  static Gate rotation(GateKind k, int qubit, int param_index = -1) {
    if (!is_rotation(k)) throw std::invalid_argument("rotation gate expected");
    return Gate{k, qubit, -1, param_index};
  }

  static Gate cnot(int control, int target) {
    if (control == target)
      throw std::invalid_argument("CNOT control equals target");
    return Gate{GateKind::Cnot, control, target, -1};
  }

  bool is_parameterized() const { return kind != GateKind::Cnot; }

  // Same placement, ignoring parameter index.
  bool same_as(const Gate& o) const {
    return kind == o.kind && qubit == o.qubit && target == o.target;
  }

  bool touches(int q) const { return qubit == q || target == q; }
};

}  // namespace rlqas
