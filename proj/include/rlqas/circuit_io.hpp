// circuit_io.hpp
// Circuit export file: plain-text gate list followed by a JSON metrics block.

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rlqas/circuit.hpp"

namespace rlqas {

inline std::string circuit_file_text(const GateSequence& seq,
                                     double test_accuracy = -1.0) {
  const CircuitMetrics m = metrics(seq);
  nlohmann::json j = {{"qubits", seq.num_qubits()},
                      {"gates", m.gates},
                      {"params", m.params},
                      {"cnots", m.cnots},
                      {"depth", m.depth}};
  if (test_accuracy >= 0.0) j["test_accuracy"] = test_accuracy;
  std::ostringstream os;
  os << export_gate_list(seq) << j.dump(2) << "\n";
  return os.str();
}

inline void write_circuit_file(const std::string& path,
                               const GateSequence& seq,
                               double test_accuracy = -1.0) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write circuit file: " + path);
  out << circuit_file_text(seq, test_accuracy);
}

inline GateSequence read_circuit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open circuit file: " + path);
  std::string gate_lines, json_text, line;
  bool in_json = false;
  while (std::getline(in, line)) {
    if (!in_json && !line.empty() && line[0] == '{') in_json = true;
    (in_json ? json_text : gate_lines) += line + "\n";
  }
  if (!in_json) throw std::runtime_error("missing metrics block in " + path);
  const nlohmann::json j = nlohmann::json::parse(json_text);
  GateSequence seq = parse_gate_list(gate_lines, j.at("qubits").get<int>());
  const CircuitMetrics m = metrics(seq);
  if (m.gates != j.at("gates").get<int>() ||
      m.params != j.at("params").get<int>())
    throw std::runtime_error("metrics block disagrees with gate list in " +
                             path);
  return seq;
}

}  // namespace rlqas
