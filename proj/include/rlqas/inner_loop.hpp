// inner_loop.hpp
// Trains a fixed circuit architecture on a dataset: per-seed uniform
// parameter init, Adam on mini-batch cross-entropy, accuracy scoring and
// best-of-seeds aggregation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rlqas/circuit.hpp"
#include "rlqas/dataset.hpp"
#include "rlqas/random.hpp"
#include "rlqas/statevector.hpp"

namespace rlqas {

enum class SeedAggregate { BestTestAccuracy, MeanTestAccuracy };

struct OptConfig {
  double learning_rate = 0.01;
  int epochs = 1000;
  int batch_size = 16;
  double init_lo = -1.0;
  double init_hi = 1.0;
  std::vector<std::uint32_t> seeds = {1, 2, 3};
  SeedAggregate aggregate = SeedAggregate::BestTestAccuracy;
};

struct SeedResult {
  std::uint32_t seed = 0;
  double final_train_acc = 0.0;
  double final_test_acc = 0.0;
  double final_loss = 0.0;
  std::vector<double> trained_params;
};

struct EvalResult {
  std::vector<SeedResult> per_seed;
  double aggregate_test_acc = 0.0;
  double aggregate_train_acc = 0.0;

  // Seed whose values define the aggregate under best-of-seeds.
  const SeedResult& best_seed() const {
    const SeedResult* best = &per_seed.front();
    for (const SeedResult& r : per_seed)
      if (r.final_test_acc > best->final_test_acc) best = &r;
    return *best;
  }
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0),
        v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -=
          lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

namespace detail {

inline EncodedBatch encode_split(const Dataset& data, Split split) {
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.num_samples(); ++i)
    if (data.split[i] == split) {
      feats.push_back(data.features[i]);
      labels.push_back(data.labels[i]);
    }
  if (feats.empty()) throw std::runtime_error("empty split");
  return encode_batch(feats, labels);
}

inline EncodedBatch gather(const EncodedBatch& full,
                           const std::vector<std::size_t>& rows) {
  EncodedBatch out;
  out.num_qubits = full.num_qubits;
  out.batch = rows.size();
  out.labels.resize(rows.size());
  const std::size_t dim = full.dim();
  out.amplitudes.resize(dim * rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.labels[r] = full.labels[rows[r]];
    for (std::size_t i = 0; i < dim; ++i)
      out.amplitudes[i * rows.size() + r] =
          full.amplitudes[i * full.batch + rows[r]];
  }
  return out;
}

inline double accuracy_on(CircuitDifferentiator& diff,
                          const GateSequence& seq,
                          const std::vector<double>& params,
                          const EncodedBatch& batch, int num_classes) {
  const std::vector<double> probs = diff.batch_class_probabilities(
      seq.gates, params, batch, num_classes);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (probs[b * num_classes + c] > probs[b * num_classes + best]) best = c;
    if (best == batch.labels[b]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.batch);
}

}  // namespace detail

// Fraction of samples in `split` whose argmax prediction matches the label.
inline double evaluate(const GateSequence& seq,
                       const std::vector<double>& params, const Dataset& data,
                       Split split) {
  CircuitDifferentiator diff;
  return detail::accuracy_on(diff, seq, params,
                             detail::encode_split(data, split),
                             data.num_classes);
}

inline EvalResult train_vqc(const GateSequence& seq, const Dataset& data,
                            const OptConfig& cfg) {
  if (seq.gates.empty()) throw std::invalid_argument("empty circuit");
  const std::size_t dim = std::size_t{1} << seq.num_qubits();
  if (data.num_features() != dim)
    throw std::invalid_argument("dataset dimension does not match qubit count");

  const EncodedBatch train = detail::encode_split(data, Split::Train);
  const EncodedBatch test = detail::encode_split(data, Split::Test);
  CircuitDifferentiator diff;

  EvalResult result;
  for (std::uint32_t seed : cfg.seeds) {
    Rng rng(seed);
    std::vector<double> params(seq.num_params);
    for (double& p : params) p = rng.uniform(cfg.init_lo, cfg.init_hi);

    AdamOptimizer adam(params.size(), cfg.learning_rate);
    std::vector<std::size_t> order(train.batch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double last_loss = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      double epoch_loss = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size();
           start += cfg.batch_size) {
        const std::size_t end =
            std::min(order.size(), start + cfg.batch_size);
        const std::vector<std::size_t> rows(order.begin() + start,
                                            order.begin() + end);
        const EncodedBatch mb = detail::gather(train, rows);
        LossGradient lg =
            diff.loss_and_gradient(seq.gates, params, mb, data.num_classes);
        if (!params.empty()) adam.step(params, lg.gradient);
        epoch_loss += lg.loss;
        ++batches;
      }
      last_loss = epoch_loss / static_cast<double>(batches);
    }

    SeedResult sr;
    sr.seed = seed;
    sr.final_loss = last_loss;
    sr.final_train_acc =
        detail::accuracy_on(diff, seq, params, train, data.num_classes);
    sr.final_test_acc =
        detail::accuracy_on(diff, seq, params, test, data.num_classes);
    sr.trained_params = std::move(params);
    result.per_seed.push_back(std::move(sr));
  }

  if (cfg.aggregate == SeedAggregate::BestTestAccuracy) {
    const SeedResult& best = result.best_seed();
    result.aggregate_test_acc = best.final_test_acc;
    result.aggregate_train_acc = best.final_train_acc;
  } else {
    for (const SeedResult& r : result.per_seed) {
      result.aggregate_test_acc += r.final_test_acc;
      result.aggregate_train_acc += r.final_train_acc;
    }
    result.aggregate_test_acc /= result.per_seed.size();
    result.aggregate_train_acc /= result.per_seed.size();
  }
  return result;
}

}  // namespace rlqas
