// env.hpp
// The circuit-construction MDP: multidiscrete action decoding, illegal-action
// rules, shaped reward and episode lifecycle. Each legal step places one gate
// and scores the resulting circuit through the (cached) inner loop.

#pragma once

#include <algorithm>
#include <bit>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rlqas/cache.hpp"
#include "rlqas/circuit.hpp"
#include "rlqas/dataset.hpp"
#include "rlqas/gate.hpp"
#include "rlqas/inner_loop.hpp"

namespace rlqas {

struct ActionSpaceSpec {
  int num_qubits = 0;
  std::vector<std::pair<int, int>> cnot_pairs;  // all ordered pairs, lex order

  static ActionSpaceSpec for_qubits(int num_qubits) {
    if (num_qubits < 2) throw std::invalid_argument("need >= 2 qubits");
    ActionSpaceSpec s;
    s.num_qubits = num_qubits;
    for (int c = 0; c < num_qubits; ++c)
      for (int t = 0; t < num_qubits; ++t)
        if (c != t) s.cnot_pairs.emplace_back(c, t);
    return s;
  }

  int num_gate_choices() const { return kNumGateKinds; }
  // C = Q!/(Q-2)! = Q*(Q-1)
  int num_qubit_choices() const { return static_cast<int>(cnot_pairs.size()); }
  int size() const { return num_gate_choices() * num_qubit_choices(); }

  Gate decode_action(int gate_idx, int qubit_idx) const {
    if (gate_idx < 0 || gate_idx >= num_gate_choices() || qubit_idx < 0 ||
        qubit_idx >= num_qubit_choices())
      throw std::out_of_range("action index out of range");
    const GateKind kind = static_cast<GateKind>(gate_idx);
    if (kind == GateKind::Cnot) {
      const auto [c, t] = cnot_pairs[qubit_idx];
      return Gate::cnot(c, t);
    }
    return Gate::rotation(kind, qubit_idx % num_qubits);
  }
};

struct RewardConfig {
  double performance_threshold = 1.0;  // T_p
  double illegal_penalty = -0.01;
  double success_bonus = 100.0;
  double legal_scale = 0.1;
  double extended_horizon = 0.0;  // E_H = 10 * D_max
  bool use_extended_horizon = true;

  static RewardConfig for_depth(int max_depth, double threshold) {
    RewardConfig c;
    c.performance_threshold = threshold;
    c.extended_horizon = 10.0 * max_depth;
    return c;
  }
};

enum class DoneReason { None, ThresholdMet, IllegalAction, DepthExhausted };

inline const char* done_reason_name(DoneReason r) {
  switch (r) {
    case DoneReason::None: return "none";
    case DoneReason::ThresholdMet: return "threshold_met";
    case DoneReason::IllegalAction: return "illegal_action";
    case DoneReason::DepthExhausted: return "depth_exhausted";
  }
  return "?";
}

enum class Violation { SameGateConsecutive, DepthExceeded };

// Remaining complexity budget in [0, 1]: mean of the fractional depth and
// gate budgets still unused.
inline double complexity_remaining(const CircuitMetrics& m, int num_qubits,
                                   int max_depth) {
  const double depth_frac =
      static_cast<double>(max_depth - m.depth) / max_depth;
  const double max_gates = static_cast<double>(num_qubits) * max_depth;
  const double gates_frac = (max_gates - m.gates) / max_gates;
  return 0.5 * (depth_frac + gates_frac);
}

// Shaped reward: illegal penalty, delta-scaled legal shaping, success bonus.
inline double compute_reward(bool legal, bool first_action,
                             double p_previous, double p_current,
                             double c_rem, const RewardConfig& cfg) {
  if (!legal) return cfg.illegal_penalty;
  const double p_delta = first_action ? p_current : p_current - p_previous;
  const double horizon = cfg.use_extended_horizon ? cfg.extended_horizon : 0.0;
  const double r_la =
      cfg.legal_scale * (0.5 * p_delta + p_delta * (c_rem + horizon));
  if (p_current >= cfg.performance_threshold)
    return r_la + cfg.success_bonus;
  return r_la;
}

struct StepResult {
  CircuitTensor observation;  // snapshot; never mutated by later steps
  double reward = 0.0;
  bool done = false;
  bool legal = false;
  DoneReason done_reason = DoneReason::None;
  double p_current = 0.0;
  CircuitMetrics metrics;
};

class CircuitEnv {
 public:
  CircuitEnv(const Dataset& data, OptConfig opt_cfg, RewardConfig reward_cfg,
             int max_depth, EvalCache& cache, bool illegal_terminates = true)
      : data_(&data), opt_cfg_(std::move(opt_cfg)),
        reward_cfg_(reward_cfg), max_depth_(max_depth), cache_(&cache),
        illegal_terminates_(illegal_terminates),
        spec_(ActionSpaceSpec::for_qubits(qubits_for(data))),
        tensor_(empty_tensor(spec_.num_qubits, kNumGateKinds, max_depth)),
        seq_(spec_.num_qubits),
        last_gate_on_qubit_(spec_.num_qubits) {}

  static int qubits_for(const Dataset& data) {
    const std::size_t dim = data.num_features();
    if (dim < 2 || (dim & (dim - 1)) != 0)
      throw std::invalid_argument("feature dim must be a power of two");
    return static_cast<int>(std::countr_zero(dim));
  }

  const ActionSpaceSpec& action_space() const { return spec_; }
  int max_depth() const { return max_depth_; }
  const RewardConfig& reward_config() const { return reward_cfg_; }
  const CircuitTensor& tensor() const { return tensor_; }
  const GateSequence& sequence() const { return seq_; }
  bool done() const { return done_; }
  int step_count() const { return step_count_; }

  const CircuitTensor& reset() {
    tensor_ = empty_tensor(spec_.num_qubits, kNumGateKinds, max_depth_);
    seq_ = GateSequence(spec_.num_qubits);
    std::fill(last_gate_on_qubit_.begin(), last_gate_on_qubit_.end(),
              std::nullopt);
    p_previous_ = 0.0;
    first_action_ = true;
    step_count_ = 0;
    done_ = false;
    return tensor_;
  }

  std::optional<Violation> is_illegal(const Gate& gate) const {
    for (int q : {gate.qubit, gate.target}) {
      if (q < 0) continue;
      if (last_gate_on_qubit_[q] && last_gate_on_qubit_[q]->same_as(gate))
        return Violation::SameGateConsecutive;
    }
    if (landing_depth(seq_, gate) >= max_depth_)
      return Violation::DepthExceeded;
    return std::nullopt;
  }

  StepResult step(int gate_idx, int qubit_idx) {
    if (done_) throw std::logic_error("step after episode end");
    ++step_count_;
    const Gate gate = spec_.decode_action(gate_idx, qubit_idx);
    StepResult res;

    if (is_illegal(gate)) {
      res.legal = false;
      res.reward = reward_cfg_.illegal_penalty;
      res.p_current = p_previous_;
      res.metrics = metrics(seq_);
      if (illegal_terminates_) {
        done_ = true;
        res.done = true;
        res.done_reason = DoneReason::IllegalAction;
      }
      res.observation = tensor_;
      return res;
    }

    place_gate(tensor_, seq_, gate);
    last_gate_on_qubit_[gate.qubit] = gate;
    if (gate.kind == GateKind::Cnot) last_gate_on_qubit_[gate.target] = gate;

    const EvalResult eval =
        cached_evaluate(tensor_, *data_, opt_cfg_, *cache_);
    res.legal = true;
    res.p_current = eval.aggregate_test_acc;
    res.metrics = metrics(seq_);
    const double c_rem =
        complexity_remaining(res.metrics, spec_.num_qubits, max_depth_);
    res.reward = compute_reward(true, first_action_, p_previous_,
                                res.p_current, c_rem, reward_cfg_);
    p_previous_ = res.p_current;
    first_action_ = false;

    if (res.p_current >= reward_cfg_.performance_threshold) {
      done_ = true;
      res.done_reason = DoneReason::ThresholdMet;
    } else if (all_qubits_full()) {
      done_ = true;
      res.done_reason = DoneReason::DepthExhausted;
    }
    res.done = done_;
    res.observation = tensor_;
    return res;
  }

 private:
  bool all_qubits_full() const {
    for (int d : seq_.qubit_depth)
      if (d < max_depth_) return false;
    return true;
  }

  const Dataset* data_;
  OptConfig opt_cfg_;
  RewardConfig reward_cfg_;
  int max_depth_;
  EvalCache* cache_;
  bool illegal_terminates_;
  ActionSpaceSpec spec_;
  CircuitTensor tensor_;
  GateSequence seq_;
  std::vector<std::optional<Gate>> last_gate_on_qubit_;
  double p_previous_ = 0.0;
  bool first_action_ = true;
  int step_count_ = 0;
  bool done_ = false;
};

}  // namespace rlqas
