// analysis.hpp
// Offline analyses over the evaluation cache and metrics logs: unique-circuit
// statistics, gate-usage patterns, gate-pair transitions, baseline comparison
// tables and cost-landscape grids. All reports are CSV-first.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlqas/cache.hpp"
#include "rlqas/circuit.hpp"
#include "rlqas/dataset.hpp"
#include "rlqas/inner_loop.hpp"
#include "rlqas/statevector.hpp"

namespace rlqas {

namespace detail {

inline std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

struct MacroReport {
  // unique circuits per (accuracy bin, depth); bin b covers [b/10, (b+1)/10)
  std::map<std::pair<int, int>, int> accuracy_depth_counts;
  // gate usage per (qubit, kind) among circuits at/above the threshold;
  // CNOT attributed to its control qubit
  std::map<std::pair<int, int>, int> gate_usage;
  // consecutive gate-kind transitions in decode order, then row-normalized
  std::array<std::array<double, kNumGateKinds>, kNumGateKinds> transitions{};
  // gate kinds per depth level among circuits at/above the threshold
  std::map<std::pair<int, int>, int> depth_distribution;
  int total_unique = 0;
  int above_threshold = 0;
  double threshold = 0.9;
};

template <typename Entries>
MacroReport analyze_macro(const Entries& entries, double threshold = 0.9) {
  if (entries.empty()) throw std::invalid_argument("empty cache");
  MacroReport rep;
  rep.threshold = threshold;
  std::array<std::array<long, kNumGateKinds>, kNumGateKinds> counts{};
  for (const auto& [key, entry] : entries) {
    const GateSequence seq = decode(entry.tensor);
    const CircuitMetrics m = metrics(seq);
    const double acc = entry.result.aggregate_test_acc;
    const int bin = std::min(9, static_cast<int>(acc * 10.0));
    ++rep.accuracy_depth_counts[{bin, m.depth}];
    ++rep.total_unique;
    if (acc < threshold) continue;
    ++rep.above_threshold;
    for (std::size_t i = 0; i < seq.gates.size(); ++i) {
      const Gate& g = seq.gates[i];
      ++rep.gate_usage[{g.qubit, static_cast<int>(g.kind)}];
      if (i + 1 < seq.gates.size())
        ++counts[static_cast<int>(g.kind)]
                [static_cast<int>(seq.gates[i + 1].kind)];
    }
    // gate kinds per landing depth, replayed under ASAP scheduling
    GateSequence replay(seq.num_qubits());
    for (const Gate& g : seq.gates) {
      const int d = landing_depth(replay, g);
      ++rep.depth_distribution[{d, static_cast<int>(g.kind)}];
      replay.qubit_depth[g.qubit] = d + 1;
      if (g.kind == GateKind::Cnot) replay.qubit_depth[g.target] = d + 1;
    }
  }
  for (int i = 0; i < kNumGateKinds; ++i) {
    long row = 0;
    for (int j = 0; j < kNumGateKinds; ++j) row += counts[i][j];
    for (int j = 0; j < kNumGateKinds; ++j)
      rep.transitions[i][j] =
          row > 0 ? static_cast<double>(counts[i][j]) / row : 0.0;
  }
  return rep;
}

inline std::string accuracy_depth_csv(const MacroReport& r) {
  std::ostringstream os;
  os << "accuracy_bin_low,depth,unique_circuits\n";
  if (r.above_threshold == 0 && r.accuracy_depth_counts.empty())
    os << "# no circuits in report\n";
  for (const auto& [key, count] : r.accuracy_depth_counts)
    os << detail::csv_double(key.first / 10.0) << "," << key.second << ","
       << count << "\n";
  return os.str();
}

inline std::string gate_usage_csv(const MacroReport& r) {
  std::ostringstream os;
  os << "qubit,gate,count\n";
  if (r.above_threshold == 0)
    os << "# no circuits at or above threshold "
       << detail::csv_double(r.threshold) << "\n";
  for (const auto& [key, count] : r.gate_usage)
    os << key.first << "," << gate_name(static_cast<GateKind>(key.second))
       << "," << count << "\n";
  return os.str();
}

inline std::string transitions_csv(const MacroReport& r) {
  std::ostringstream os;
  os << "from";
  for (int j = 0; j < kNumGateKinds; ++j)
    os << "," << gate_name(static_cast<GateKind>(j));
  os << "\n";
  if (r.above_threshold == 0)
    os << "# no circuits at or above threshold "
       << detail::csv_double(r.threshold) << "\n";
  for (int i = 0; i < kNumGateKinds; ++i) {
    os << gate_name(static_cast<GateKind>(i));
    for (int j = 0; j < kNumGateKinds; ++j)
      os << "," << detail::csv_double(r.transitions[i][j]);
    os << "\n";
  }
  return os.str();
}

inline std::string depth_distribution_csv(const MacroReport& r) {
  std::ostringstream os;
  os << "depth,gate,count\n";
  if (r.above_threshold == 0)
    os << "# no circuits at or above threshold "
       << detail::csv_double(r.threshold) << "\n";
  for (const auto& [key, count] : r.depth_distribution)
    os << key.first << "," << gate_name(static_cast<GateKind>(key.second))
       << "," << count << "\n";
  return os.str();
}

// --------------------------------------------------------------------------

struct ComparisonRow {
  std::string name;
  CircuitMetrics metrics;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

inline ComparisonRow evaluate_architecture(const std::string& name,
                                           const GateSequence& seq,
                                           const Dataset& data,
                                           const OptConfig& cfg) {
  const EvalResult r = train_vqc(seq, data, cfg);
  return {name, metrics(seq), r.aggregate_train_acc, r.aggregate_test_acc};
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "architecture,gates,params,cnots,depth,train_accuracy,test_accuracy\n";
  for (const ComparisonRow& r : rows)
    os << r.name << "," << r.metrics.gates << "," << r.metrics.params << ","
       << r.metrics.cnots << "," << r.metrics.depth << ","
       << detail::csv_double(r.train_acc) << ","
       << detail::csv_double(r.test_acc) << "\n";
  return os.str();
}

// --------------------------------------------------------------------------

// Cross-entropy of the training split over a uniform grid of two parameters,
// the rest held at `params`.
inline std::string cost_landscape_csv(const GateSequence& seq,
                                      const std::vector<double>& params,
                                      const Dataset& data, int param_a,
                                      int param_b, double lo, double hi,
                                      int grid) {
  if (seq.num_params < 2)
    throw std::invalid_argument("cost landscape needs >= 2 parameters");
  if (param_a < 0 || param_a >= seq.num_params || param_b < 0 ||
      param_b >= seq.num_params || param_a == param_b)
    throw std::invalid_argument("bad parameter pair");
  if (grid < 2) throw std::invalid_argument("grid must be >= 2");

  std::vector<std::vector<double>> feats;
  std::vector<std::vector<int>> onehot;
  for (std::size_t i = 0; i < data.num_samples(); ++i)
    if (data.split[i] == Split::Train) {
      feats.push_back(data.features[i]);
      onehot.push_back(data.labels_onehot[i]);
    }

  std::vector<double> p = params;
  std::ostringstream os;
  os << "theta_" << param_a << ",theta_" << param_b << ",loss\n";
  for (int i = 0; i < grid; ++i) {
    const double a = lo + (hi - lo) * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double b = lo + (hi - lo) * j / (grid - 1);
      p[param_a] = a;
      p[param_b] = b;
      const LossGradient lg = loss_gradient(seq.gates, p, feats, onehot);
      os << detail::csv_double(a) << "," << detail::csv_double(b) << ","
         << detail::csv_double(lg.loss) << "\n";
    }
  }
  return os.str();
}

}  // namespace rlqas
