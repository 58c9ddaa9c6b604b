// policy.hpp
// Factorized multidiscrete policy: a shared [64, 64] tanh trunk with a
// gate head, a qubit-permutation head and a scalar value head. Parameters
// live in one flat vector so the optimizer, gradient clipping and
// checkpointing stay simple; backprop is written out by hand.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlqas/random.hpp"

namespace rlqas {

struct PolicyConfig {
  int obs_dim = 0;
  int num_gate_choices = 4;
  int num_qubit_choices = 0;
  int hidden = 64;
};

namespace detail {

// Orthogonal init (QR of a Gaussian matrix, sign-corrected), scaled by gain.
inline Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  Eigen::MatrixXd g(big, big);
  for (int i = 0; i < big; ++i)
    for (int j = 0; j < big; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < big; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return gain * q.topLeftCorner(rows, cols);
}

inline void softmax_columns(Eigen::MatrixXd& m) {
  for (int c = 0; c < m.cols(); ++c) {
    Eigen::VectorXd col = m.col(c);
    const double mx = col.maxCoeff();
    col = (col.array() - mx).exp();
    m.col(c) = col / col.sum();
  }
}

}  // namespace detail

struct PolicyForward {
  Eigen::MatrixXd h1, h2;              // trunk activations
  Eigen::MatrixXd gate_probs;          // [4 x B]
  Eigen::MatrixXd qubit_probs;         // [C x B]
  Eigen::VectorXd values;              // [B]
};

class PolicyNetwork {
 public:
  explicit PolicyNetwork(const PolicyConfig& cfg, std::uint64_t init_seed)
      : cfg_(cfg) {
    if (cfg.obs_dim < 1 || cfg.num_qubit_choices < 1)
      throw std::invalid_argument("bad policy config");
    layout();
    params_.setZero(total_);
    Rng rng(init_seed ^ 0x504f4c494359ULL);
    const double root2 = std::sqrt(2.0);
    W1() = detail::orthogonal(cfg_.hidden, cfg_.obs_dim, root2, rng);
    W2() = detail::orthogonal(cfg_.hidden, cfg_.hidden, root2, rng);
    Wg() = detail::orthogonal(cfg_.num_gate_choices, cfg_.hidden, 0.01, rng);
    Wq() = detail::orthogonal(cfg_.num_qubit_choices, cfg_.hidden, 0.01, rng);
    Wv() = detail::orthogonal(1, cfg_.hidden, 1.0, rng);
  }

  const PolicyConfig& config() const { return cfg_; }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  std::size_t num_parameters() const { return total_; }

  // obs: [obs_dim x B] columns of flattened tensors.
  PolicyForward forward(const Eigen::MatrixXd& obs) const {
    if (obs.rows() != cfg_.obs_dim)
      throw std::invalid_argument("observation shape mismatch");
    PolicyForward f;
    f.h1 = ((W1() * obs).colwise() + b1()).array().tanh();
    f.h2 = ((W2() * f.h1).colwise() + b2()).array().tanh();
    f.gate_probs = (Wg() * f.h2).colwise() + bg();
    f.qubit_probs = (Wq() * f.h2).colwise() + bq();
    detail::softmax_columns(f.gate_probs);
    detail::softmax_columns(f.qubit_probs);
    f.values = ((Wv() * f.h2).colwise() + bv()).row(0);
    return f;
  }

  // Backprop of head-space gradients through the trunk; accumulates into
  // `grad` (same layout as the parameter vector).
  void backward(const Eigen::MatrixXd& obs, const PolicyForward& f,
                const Eigen::MatrixXd& d_gate_logits,
                const Eigen::MatrixXd& d_qubit_logits,
                const Eigen::VectorXd& d_values,
                Eigen::VectorXd& grad) const {
    GradViews g(grad, *this);
    g.Wg += d_gate_logits * f.h2.transpose();
    g.bg += d_gate_logits.rowwise().sum();
    g.Wq += d_qubit_logits * f.h2.transpose();
    g.bq += d_qubit_logits.rowwise().sum();
    g.Wv += d_values.transpose() * f.h2.transpose();
    g.bv(0) += d_values.sum();

    Eigen::MatrixXd dh2 = Wg().transpose() * d_gate_logits +
                          Wq().transpose() * d_qubit_logits +
                          Wv().transpose() * d_values.transpose();
    dh2.array() *= 1.0 - f.h2.array().square();
    g.W2 += dh2 * f.h1.transpose();
    g.b2 += dh2.rowwise().sum();

    Eigen::MatrixXd dh1 = W2().transpose() * dh2;
    dh1.array() *= 1.0 - f.h1.array().square();
    g.W1 += dh1 * obs.transpose();
    g.b1 += dh1.rowwise().sum();
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    const char magic[4] = {'R', 'L', 'Q', 'P'};
    out.write(magic, 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t n = total_;
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(params_.data()),
              static_cast<std::streamsize>(total_ * sizeof(double)));
  }

  void load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in || std::string(magic, 4) != "RLQP" || version != 1 || n != total_)
      throw std::runtime_error("bad checkpoint: " + path);
    in.read(reinterpret_cast<char*>(params_.data()),
            static_cast<std::streamsize>(total_ * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  }

  // parameter views
  Eigen::Map<Eigen::MatrixXd> W1() { return view(o_W1, cfg_.hidden, cfg_.obs_dim); }
  Eigen::Map<Eigen::VectorXd> b1() { return vec(o_b1, cfg_.hidden); }
  Eigen::Map<Eigen::MatrixXd> W2() { return view(o_W2, cfg_.hidden, cfg_.hidden); }
  Eigen::Map<Eigen::VectorXd> b2() { return vec(o_b2, cfg_.hidden); }
  Eigen::Map<Eigen::MatrixXd> Wg() { return view(o_Wg, cfg_.num_gate_choices, cfg_.hidden); }
  Eigen::Map<Eigen::VectorXd> bg() { return vec(o_bg, cfg_.num_gate_choices); }
  Eigen::Map<Eigen::MatrixXd> Wq() { return view(o_Wq, cfg_.num_qubit_choices, cfg_.hidden); }
  Eigen::Map<Eigen::VectorXd> bq() { return vec(o_bq, cfg_.num_qubit_choices); }
  Eigen::Map<Eigen::MatrixXd> Wv() { return view(o_Wv, 1, cfg_.hidden); }
  Eigen::Map<Eigen::VectorXd> bv() { return vec(o_bv, 1); }

  Eigen::Map<const Eigen::MatrixXd> W1() const { return view(o_W1, cfg_.hidden, cfg_.obs_dim); }
  Eigen::Map<const Eigen::VectorXd> b1() const { return vec(o_b1, cfg_.hidden); }
  Eigen::Map<const Eigen::MatrixXd> W2() const { return view(o_W2, cfg_.hidden, cfg_.hidden); }
  Eigen::Map<const Eigen::VectorXd> b2() const { return vec(o_b2, cfg_.hidden); }
  Eigen::Map<const Eigen::MatrixXd> Wg() const { return view(o_Wg, cfg_.num_gate_choices, cfg_.hidden); }
  Eigen::Map<const Eigen::VectorXd> bg() const { return vec(o_bg, cfg_.num_gate_choices); }
  Eigen::Map<const Eigen::MatrixXd> Wq() const { return view(o_Wq, cfg_.num_qubit_choices, cfg_.hidden); }
  Eigen::Map<const Eigen::VectorXd> bq() const { return vec(o_bq, cfg_.num_qubit_choices); }
  Eigen::Map<const Eigen::MatrixXd> Wv() const { return view(o_Wv, 1, cfg_.hidden); }
  Eigen::Map<const Eigen::VectorXd> bv() const { return vec(o_bv, 1); }

 private:
  struct GradViews {
    Eigen::Map<Eigen::MatrixXd> W1, W2, Wg, Wq, Wv;
    Eigen::Map<Eigen::VectorXd> b1, b2, bg, bq, bv;
    GradViews(Eigen::VectorXd& g, const PolicyNetwork& n)
        : W1(g.data() + n.o_W1, n.cfg_.hidden, n.cfg_.obs_dim),
          W2(g.data() + n.o_W2, n.cfg_.hidden, n.cfg_.hidden),
          Wg(g.data() + n.o_Wg, n.cfg_.num_gate_choices, n.cfg_.hidden),
          Wq(g.data() + n.o_Wq, n.cfg_.num_qubit_choices, n.cfg_.hidden),
          Wv(g.data() + n.o_Wv, 1, n.cfg_.hidden),
          b1(g.data() + n.o_b1, n.cfg_.hidden),
          b2(g.data() + n.o_b2, n.cfg_.hidden),
          bg(g.data() + n.o_bg, n.cfg_.num_gate_choices),
          bq(g.data() + n.o_bq, n.cfg_.num_qubit_choices),
          bv(g.data() + n.o_bv, 1) {}
  };

  void layout() {
    std::size_t o = 0;
    auto next = [&o](std::size_t n) {
      const std::size_t at = o;
      o += n;
      return at;
    };
    o_W1 = next(static_cast<std::size_t>(cfg_.hidden) * cfg_.obs_dim);
    o_b1 = next(cfg_.hidden);
    o_W2 = next(static_cast<std::size_t>(cfg_.hidden) * cfg_.hidden);
    o_b2 = next(cfg_.hidden);
    o_Wg = next(static_cast<std::size_t>(cfg_.num_gate_choices) * cfg_.hidden);
    o_bg = next(cfg_.num_gate_choices);
    o_Wq = next(static_cast<std::size_t>(cfg_.num_qubit_choices) * cfg_.hidden);
    o_bq = next(cfg_.num_qubit_choices);
    o_Wv = next(cfg_.hidden);
    o_bv = next(1);
    total_ = o;
  }

  Eigen::Map<Eigen::MatrixXd> view(std::size_t off, int r, int c) {
    return {params_.data() + off, r, c};
  }
  Eigen::Map<const Eigen::MatrixXd> view(std::size_t off, int r, int c) const {
    return {params_.data() + off, r, c};
  }
  Eigen::Map<Eigen::VectorXd> vec(std::size_t off, int n) {
    return {params_.data() + off, n};
  }
  Eigen::Map<const Eigen::VectorXd> vec(std::size_t off, int n) const {
    return {params_.data() + off, n};
  }

  PolicyConfig cfg_;
  Eigen::VectorXd params_;
  std::size_t o_W1, o_b1, o_W2, o_b2, o_Wg, o_bg, o_Wq, o_bq, o_Wv, o_bv;
  std::size_t total_ = 0;
};

struct SampledAction {
  int gate_idx = 0;
  int qubit_idx = 0;
  double log_prob = 0.0;  // sum of both heads
  double value = 0.0;
};

inline int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

inline SampledAction sample_action(const PolicyNetwork& net,
                                   const Eigen::VectorXd& obs, Rng& rng,
                                   bool greedy = false) {
  Eigen::MatrixXd o(obs.size(), 1);
  o.col(0) = obs;
  const PolicyForward f = net.forward(o);
  SampledAction a;
  if (greedy) {
    f.gate_probs.col(0).maxCoeff(&a.gate_idx);
    f.qubit_probs.col(0).maxCoeff(&a.qubit_idx);
  } else {
    a.gate_idx = sample_categorical(f.gate_probs.col(0), rng);
    a.qubit_idx = sample_categorical(f.qubit_probs.col(0), rng);
  }
  a.log_prob = std::log(f.gate_probs(a.gate_idx, 0)) +
               std::log(f.qubit_probs(a.qubit_idx, 0));
  a.value = f.values[0];
  return a;
}

}  // namespace rlqas
