// statevector.hpp
// Dense statevector simulation of Rx/Ry/Rz/CNOT circuits, amplitude encoding,
// class-probability measurement and exact reverse-mode gradients of the
// cross-entropy classification loss.
//
// Convention: qubit 0 is the most significant bit of the basis-state index.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rlqas/gate.hpp"

namespace rlqas {

using cplx = std::complex<double>;

constexpr double kProbClampMin = 1e-12;  // guard before log in cross-entropy

struct Statevector {
  std::vector<cplx> amplitudes;
  int num_qubits = 0;

  static Statevector zero_state(int num_qubits) {
    if (num_qubits < 1) throw std::invalid_argument("num_qubits must be >= 1");
    Statevector s;
    s.num_qubits = num_qubits;
    s.amplitudes.assign(std::size_t{1} << num_qubits, cplx{0.0, 0.0});
    s.amplitudes[0] = cplx{1.0, 0.0};
    return s;
  }

  std::size_t dim() const { return amplitudes.size(); }

  double norm_sq() const {
    double n = 0.0;
    for (const cplx& a : amplitudes) n += std::norm(a);
    return n;
  }
};

struct ClassDistribution {
  std::vector<double> probabilities;
};

namespace detail {

inline int bit_position(int num_qubits, int qubit) {
  if (qubit < 0 || qubit >= num_qubits)
    throw std::out_of_range("qubit index out of range");
  return num_qubits - 1 - qubit;  // qubit 0 = MSB
}

// Applies a single-qubit rotation across `batch` interleaved states laid out
// amplitude-major: amps[i * batch + b]. The same kernels back the scalar and
// the batched training paths.
inline void apply_rotation_batch(GateKind kind, int num_qubits, int qubit,
                                 double theta, cplx* amps, std::size_t batch) {
  const std::size_t dim = std::size_t{1} << num_qubits;
  const std::size_t stride = std::size_t{1} << bit_position(num_qubits, qubit);
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  switch (kind) {
    case GateKind::Rx: {
      const cplx ms{0.0, -s};
      for (std::size_t base = 0; base < dim; base += 2 * stride)
        for (std::size_t off = 0; off < stride; ++off) {
          cplx* a0 = amps + (base + off) * batch;
          cplx* a1 = a0 + stride * batch;
          for (std::size_t b = 0; b < batch; ++b) {
            const cplx x0 = a0[b], x1 = a1[b];
            a0[b] = c * x0 + ms * x1;
            a1[b] = ms * x0 + c * x1;
          }
        }
      break;
    }
    case GateKind::Ry: {
      for (std::size_t base = 0; base < dim; base += 2 * stride)
        for (std::size_t off = 0; off < stride; ++off) {
          cplx* a0 = amps + (base + off) * batch;
          cplx* a1 = a0 + stride * batch;
          for (std::size_t b = 0; b < batch; ++b) {
            const cplx x0 = a0[b], x1 = a1[b];
            a0[b] = c * x0 - s * x1;
            a1[b] = s * x0 + c * x1;
          }
        }
      break;
    }
    case GateKind::Rz: {
      const cplx e0{c, -s};
      const cplx e1{c, s};
      for (std::size_t base = 0; base < dim; base += 2 * stride)
        for (std::size_t off = 0; off < stride; ++off) {
          cplx* a0 = amps + (base + off) * batch;
          cplx* a1 = a0 + stride * batch;
          for (std::size_t b = 0; b < batch; ++b) {
            a0[b] *= e0;
            a1[b] *= e1;
          }
        }
      break;
    }
    case GateKind::Cnot:
      throw std::invalid_argument("CNOT is not a rotation");
  }
}

inline void apply_cnot_batch(int num_qubits, int control, int target,
                             cplx* amps, std::size_t batch) {
  if (control == target)
    throw std::invalid_argument("CNOT control equals target");
  const std::size_t dim = std::size_t{1} << num_qubits;
  const std::size_t cbit = std::size_t{1}
                           << bit_position(num_qubits, control);
  const std::size_t tbit = std::size_t{1} << bit_position(num_qubits, target);
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cbit) && !(i & tbit)) {
      cplx* a0 = amps + i * batch;
      cplx* a1 = amps + (i | tbit) * batch;
      for (std::size_t b = 0; b < batch; ++b) std::swap(a0[b], a1[b]);
    }
  }
}

inline void apply_gate_batch(const Gate& g, double theta, int num_qubits,
                             cplx* amps, std::size_t batch) {
  if (g.kind == GateKind::Cnot)
    apply_cnot_batch(num_qubits, g.qubit, g.target, amps, batch);
  else
    apply_rotation_batch(g.kind, num_qubits, g.qubit, theta, amps, batch);
}

// Transposed (not conjugated) gate action, used by the reverse sweep.
inline void apply_gate_transpose_batch(const Gate& g, double theta,
                                       int num_qubits, cplx* amps,
                                       std::size_t batch) {
  switch (g.kind) {
    case GateKind::Rx:  // symmetric
    case GateKind::Rz:  // diagonal
      apply_rotation_batch(g.kind, num_qubits, g.qubit, theta, amps, batch);
      break;
    case GateKind::Ry:
      apply_rotation_batch(GateKind::Ry, num_qubits, g.qubit, -theta, amps,
                           batch);
      break;
    case GateKind::Cnot:  // permutation, self-transpose
      apply_cnot_batch(num_qubits, g.qubit, g.target, amps, batch);
      break;
  }
}

// sum_i v_i * (P psi)_i for the rotation generator P in {X, Y, Z} on `qubit`.
inline cplx pauli_bilinear_batch(GateKind kind, int num_qubits, int qubit,
                                 const cplx* v, const cplx* psi,
                                 std::size_t batch) {
  const std::size_t dim = std::size_t{1} << num_qubits;
  const std::size_t stride = std::size_t{1} << bit_position(num_qubits, qubit);
  cplx acc{0.0, 0.0};
  for (std::size_t base = 0; base < dim; base += 2 * stride)
    for (std::size_t off = 0; off < stride; ++off) {
      const cplx* v0 = v + (base + off) * batch;
      const cplx* v1 = v0 + stride * batch;
      const cplx* p0 = psi + (base + off) * batch;
      const cplx* p1 = p0 + stride * batch;
      switch (kind) {
        case GateKind::Rx:  // X
          for (std::size_t b = 0; b < batch; ++b)
            acc += v0[b] * p1[b] + v1[b] * p0[b];
          break;
        case GateKind::Ry:  // Y
          for (std::size_t b = 0; b < batch; ++b)
            acc += cplx{0.0, 1.0} * (v1[b] * p0[b] - v0[b] * p1[b]);
          break;
        case GateKind::Rz:  // Z
          for (std::size_t b = 0; b < batch; ++b)
            acc += v0[b] * p0[b] - v1[b] * p1[b];
          break;
        case GateKind::Cnot:
          throw std::invalid_argument("CNOT has no rotation generator");
      }
    }
  return acc;
}

}  // namespace detail

// Basis state i belongs to class floor(i * num_classes / 2^Q): contiguous
// blocks whose sizes differ by at most one.
inline int class_of_basis_state(std::size_t index, int num_classes,
                                std::size_t dim) {
  return static_cast<int>(index * static_cast<std::size_t>(num_classes) / dim);
}

inline Statevector amplitude_encode(std::span<const double> features) {
  const std::size_t n = features.size();
  if (n < 2 || (n & (n - 1)) != 0)
    throw std::invalid_argument("feature length must be a power of two >= 2");
  double norm_sq = 0.0;
  for (double f : features) norm_sq += f * f;
  if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-9)
    throw std::invalid_argument("features must be L2-normalized");
  Statevector s;
  s.num_qubits = static_cast<int>(std::countr_zero(n));
  s.amplitudes.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.amplitudes[i] = cplx{features[i], 0.0};
  return s;
}

inline Statevector apply_gate(const Statevector& state, const Gate& gate,
                              double theta = 0.0) {
  Statevector out = state;
  detail::apply_gate_batch(gate, theta, state.num_qubits,
                           out.amplitudes.data(), 1);
  return out;
}

inline std::size_t count_rotations(std::span<const Gate> gates) {
  std::size_t n = 0;
  for (const Gate& g : gates) n += g.is_parameterized() ? 1 : 0;
  return n;
}

inline Statevector run_circuit(std::span<const Gate> gates,
                               std::span<const double> params,
                               const Statevector& input) {
  if (count_rotations(gates) != params.size())
    throw std::invalid_argument("parameter count mismatch");
  Statevector state = input;
  std::size_t p = 0;
  for (const Gate& g : gates) {
    const double theta = g.is_parameterized() ? params[p++] : 0.0;
    detail::apply_gate_batch(g, theta, state.num_qubits,
                             state.amplitudes.data(), 1);
  }
  return state;
}

inline ClassDistribution class_probabilities(const Statevector& state,
                                             int num_classes) {
  const std::size_t dim = state.dim();
  if (num_classes < 1 || static_cast<std::size_t>(num_classes) > dim)
    throw std::invalid_argument("num_classes must be in [1, 2^Q]");
  ClassDistribution d;
  d.probabilities.assign(num_classes, 0.0);
  for (std::size_t i = 0; i < dim; ++i)
    d.probabilities[class_of_basis_state(i, num_classes, dim)] +=
        std::norm(state.amplitudes[i]);
  double total = 0.0;
  for (double p : d.probabilities) total += p;
  if (total > 0.0)
    for (double& p : d.probabilities) p /= total;
  return d;
}

inline int predict(const ClassDistribution& probs) {
  if (probs.probabilities.empty())
    throw std::invalid_argument("empty distribution");
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.probabilities.size()); ++c)
    if (probs.probabilities[c] > probs.probabilities[best]) best = c;
  return best;
}

// ---------------------------------------------------------------------------
// Batched classification loss and gradient.
//
// States are stored amplitude-major: amps[i * batch + b] is amplitude i of
// sample b, so gate kernels stream over contiguous sample blocks.

struct EncodedBatch {
  std::vector<cplx> amplitudes;  // dim * batch, amplitude-major
  std::vector<int> labels;       // class index per sample
  int num_qubits = 0;
  std::size_t batch = 0;

  std::size_t dim() const { return std::size_t{1} << num_qubits; }
};

// Rows of `features` must be L2-normalized, length 2^Q each.
inline EncodedBatch encode_batch(std::span<const std::vector<double>> features,
                                 std::span<const int> labels) {
  if (features.empty() || features.size() != labels.size())
    throw std::invalid_argument("empty batch or feature/label size mismatch");
  const std::size_t dim = features[0].size();
  if (dim < 2 || (dim & (dim - 1)) != 0)
    throw std::invalid_argument("feature length must be a power of two >= 2");
  EncodedBatch eb;
  eb.num_qubits = static_cast<int>(std::countr_zero(dim));
  eb.batch = features.size();
  eb.labels.assign(labels.begin(), labels.end());
  eb.amplitudes.assign(dim * eb.batch, cplx{0.0, 0.0});
  for (std::size_t b = 0; b < eb.batch; ++b) {
    if (features[b].size() != dim)
      throw std::invalid_argument("ragged feature rows");
    for (std::size_t i = 0; i < dim; ++i)
      eb.amplitudes[i * eb.batch + b] = cplx{features[b][i], 0.0};
  }
  return eb;
}

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Scratch buffers reused across gradient calls; one instance per thread.
class CircuitDifferentiator {
 public:
  // Mean cross-entropy over the batch and its exact gradient w.r.t. the
  // rotation parameters, by a forward pass that checkpoints the state after
  // every gate and a transposed reverse sweep.
  LossGradient loss_and_gradient(std::span<const Gate> gates,
                                 std::span<const double> params,
                                 const EncodedBatch& input, int num_classes) {
    if (count_rotations(gates) != params.size())
      throw std::invalid_argument("parameter count mismatch");
    if (input.batch == 0) throw std::invalid_argument("empty batch");
    const std::size_t dim = input.dim();
    const std::size_t batch = input.batch;
    const std::size_t span = dim * batch;
    const std::size_t num_gates = gates.size();

    // forward, checkpointing after every gate
    checkpoints_.resize((num_gates + 1) * span);
    std::copy(input.amplitudes.begin(), input.amplitudes.end(),
              checkpoints_.begin());
    {
      std::size_t p = 0;
      for (std::size_t k = 0; k < num_gates; ++k) {
        cplx* cur = checkpoints_.data() + k * span;
        cplx* next = checkpoints_.data() + (k + 1) * span;
        std::copy(cur, cur + span, next);
        const double theta = gates[k].is_parameterized() ? params[p++] : 0.0;
        detail::apply_gate_batch(gates[k], theta, input.num_qubits, next,
                                 batch);
      }
    }

    const cplx* final_state = checkpoints_.data() + num_gates * span;

    // loss and dL/d(true-class probability)
    LossGradient out;
    out.gradient.assign(params.size(), 0.0);
    prob_grad_.assign(batch, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const int label = input.labels[b];
      if (label < 0 || label >= num_classes)
        throw std::invalid_argument("label out of range");
      double p_true = 0.0;
      for (std::size_t i = 0; i < dim; ++i)
        if (class_of_basis_state(i, num_classes, dim) == label)
          p_true += std::norm(final_state[i * batch + b]);
      if (p_true > kProbClampMin) {
        out.loss += -std::log(p_true);
        prob_grad_[b] = -1.0 / (p_true * static_cast<double>(batch));
      } else {
        out.loss += -std::log(kProbClampMin);  // clamped; zero gradient
      }
    }
    out.loss /= static_cast<double>(batch);

    if (params.empty()) return out;

    // adjoint seed: v_i = dL/dpsi_i = dL/dp_{class(i)} * conj(psi_i)
    adjoint_.assign(span, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < dim; ++i) {
      const int cls = class_of_basis_state(i, num_classes, dim);
      for (std::size_t b = 0; b < batch; ++b)
        if (input.labels[b] == cls)
          adjoint_[i * batch + b] =
              prob_grad_[b] * std::conj(final_state[i * batch + b]);
    }

    // reverse sweep: grad_k = Im(sum_i v_i (P psi_k)_i), then v <- U_k^T v
    std::size_t p = params.size();
    for (std::size_t k = num_gates; k-- > 0;) {
      const Gate& g = gates[k];
      const cplx* psi_k = checkpoints_.data() + (k + 1) * span;
      if (g.is_parameterized()) {
        --p;
        const cplx t = detail::pauli_bilinear_batch(
            g.kind, input.num_qubits, g.qubit, adjoint_.data(), psi_k, batch);
        out.gradient[p] = t.imag();
      }
      const double theta = g.is_parameterized() ? params[p] : 0.0;
      detail::apply_gate_transpose_batch(g, theta, input.num_qubits,
                                         adjoint_.data(), batch);
    }
    return out;
  }

  // Forward-only: per-sample class probabilities, row-major [batch x classes].
  std::vector<double> batch_class_probabilities(std::span<const Gate> gates,
                                                std::span<const double> params,
                                                const EncodedBatch& input,
                                                int num_classes) {
    if (count_rotations(gates) != params.size())
      throw std::invalid_argument("parameter count mismatch");
    const std::size_t dim = input.dim();
    const std::size_t batch = input.batch;
    state_.assign(input.amplitudes.begin(), input.amplitudes.end());
    std::size_t p = 0;
    for (const Gate& g : gates) {
      const double theta = g.is_parameterized() ? params[p++] : 0.0;
      detail::apply_gate_batch(g, theta, input.num_qubits, state_.data(),
                               batch);
    }
    std::vector<double> probs(batch * num_classes, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      const int cls = class_of_basis_state(i, num_classes, dim);
      for (std::size_t b = 0; b < batch; ++b)
        probs[b * num_classes + cls] += std::norm(state_[i * batch + b]);
    }
    return probs;
  }

 private:
  std::vector<cplx> checkpoints_;
  std::vector<cplx> adjoint_;
  std::vector<cplx> state_;
  std::vector<double> prob_grad_;
};

// Mean cross-entropy loss and exact parameter gradient for a batch given as
// (features, one-hot labels) rows.
inline LossGradient loss_gradient(std::span<const Gate> gates,
                                  std::span<const double> params,
                                  std::span<const std::vector<double>> features,
                                  std::span<const std::vector<int>> onehot) {
  if (features.empty()) throw std::invalid_argument("empty batch");
  const int num_classes = static_cast<int>(onehot[0].size());
  std::vector<int> labels(features.size());
  for (std::size_t i = 0; i < onehot.size(); ++i) {
    int cls = -1;
    for (int c = 0; c < num_classes; ++c)
      if (onehot[i][c]) cls = c;
    if (cls < 0) throw std::invalid_argument("one-hot row without a 1");
    labels[i] = cls;
  }
  EncodedBatch eb = encode_batch(features, labels);
  CircuitDifferentiator diff;
  return diff.loss_and_gradient(gates, params, eb, num_classes);
}

}  // namespace rlqas
