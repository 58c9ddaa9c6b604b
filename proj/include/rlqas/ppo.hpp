// ppo.hpp
// Proximal policy optimization over the circuit-construction environment:
// rollout collection, generalized advantage estimation, the clipped
// surrogate update, and a uniform-random baseline agent.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlqas/circuit.hpp"
#include "rlqas/env.hpp"
#include "rlqas/metrics_log.hpp"
#include "rlqas/policy.hpp"
#include "rlqas/random.hpp"

namespace rlqas {

struct PpoConfig {
  double learning_rate = 0.003;
  int n_steps = 128;
  int batch_size = 128;
  int n_epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double ent_coef = 0.03;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  long total_steps = 100000;
};

struct RolloutBuffer {
  Eigen::MatrixXd observations;  // [obs_dim x n]
  std::vector<int> gate_actions;
  std::vector<int> qubit_actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;  // terminal after this transition
  std::vector<double> values;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return rewards.size(); }
};

// Standard GAE recursion, resetting at terminals; returns = advantages +
// values. `last_value` bootstraps a rollout cut mid-episode.
inline void compute_gae(RolloutBuffer& buf, double gamma, double lambda,
                        double last_value) {
  const std::size_t n = buf.size();
  if (n == 0) throw std::invalid_argument("empty rollout buffer");
  buf.advantages.assign(n, 0.0);
  buf.returns.assign(n, 0.0);
  double gae = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = (t + 1 < n) ? buf.values[t + 1] : last_value;
    const double not_done = buf.dones[t] ? 0.0 : 1.0;
    const double delta =
        buf.rewards[t] + gamma * next_value * not_done - buf.values[t];
    gae = delta + gamma * lambda * not_done * gae;
    buf.advantages[t] = gae;
    buf.returns[t] = gae + buf.values[t];
  }
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
};

class EigenAdam {
 public:
  EigenAdam(std::size_t n, double lr, double beta1 = 0.9,
            double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.setZero(n);
    v_.setZero(n);
  }

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_.array().matrix() +
         (1.0 - beta2_) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    params.array() -=
        lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

// One PPO minibatch loss (clipped surrogate + value MSE + entropy bonus) and
// its parameter gradient. Exposed separately so tests can finite-difference
// the full objective.
inline double ppo_minibatch_loss(const PolicyNetwork& net,
                                 const Eigen::MatrixXd& obs,
                                 const std::vector<int>& gate_actions,
                                 const std::vector<int>& qubit_actions,
                                 const std::vector<double>& old_log_probs,
                                 const std::vector<double>& advantages,
                                 const std::vector<double>& returns,
                                 const PpoConfig& cfg, Eigen::VectorXd* grad,
                                 UpdateStats* stats = nullptr) {
  const int B = static_cast<int>(gate_actions.size());
  const PolicyForward f = net.forward(obs);
  const double invB = 1.0 / B;

  Eigen::MatrixXd d_gate = Eigen::MatrixXd::Zero(f.gate_probs.rows(), B);
  Eigen::MatrixXd d_qubit = Eigen::MatrixXd::Zero(f.qubit_probs.rows(), B);
  Eigen::VectorXd d_value(B);

  double policy_loss = 0.0, value_loss = 0.0, entropy_sum = 0.0;
  for (int b = 0; b < B; ++b) {
    const int ag = gate_actions[b];
    const int aq = qubit_actions[b];
    const double logp =
        std::log(f.gate_probs(ag, b)) + std::log(f.qubit_probs(aq, b));
    const double ratio = std::exp(logp - old_log_probs[b]);
    const double adv = advantages[b];
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
    const double surr1 = ratio * adv;
    const double surr2 = clipped * adv;
    policy_loss += -std::min(surr1, surr2) * invB;
    // gradient flows only through the unclipped branch when it is active
    const double dlogp_coef = (surr1 <= surr2) ? -adv * ratio * invB : 0.0;

    double ent_g = 0.0, ent_q = 0.0;
    for (int i = 0; i < f.gate_probs.rows(); ++i) {
      const double p = f.gate_probs(i, b);
      if (p > 0) ent_g -= p * std::log(p);
    }
    for (int i = 0; i < f.qubit_probs.rows(); ++i) {
      const double p = f.qubit_probs(i, b);
      if (p > 0) ent_q -= p * std::log(p);
    }
    entropy_sum += (ent_g + ent_q) * invB;

    // d(logp)/dz = onehot - p;  d(-H)/dz = p .* (log p + H)
    for (int i = 0; i < f.gate_probs.rows(); ++i) {
      const double p = f.gate_probs(i, b);
      d_gate(i, b) = dlogp_coef * ((i == ag ? 1.0 : 0.0) - p) +
                     cfg.ent_coef * invB * p * (std::log(p) + ent_g);
    }
    for (int i = 0; i < f.qubit_probs.rows(); ++i) {
      const double p = f.qubit_probs(i, b);
      d_qubit(i, b) = dlogp_coef * ((i == aq ? 1.0 : 0.0) - p) +
                      cfg.ent_coef * invB * p * (std::log(p) + ent_q);
    }

    const double verr = f.values[b] - returns[b];
    value_loss += verr * verr * invB;
    d_value[b] = cfg.vf_coef * 2.0 * verr * invB;
  }

  if (grad) net.backward(obs, f, d_gate, d_qubit, d_value, *grad);
  if (stats) {
    stats->policy_loss += policy_loss;
    stats->value_loss += value_loss;
    stats->entropy += entropy_sum;
    ++stats->minibatches;
  }
  return policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * entropy_sum;
}

inline UpdateStats ppo_update(PolicyNetwork& net, EigenAdam& adam,
                              RolloutBuffer& buf, const PpoConfig& cfg,
                              Rng& rng) {
  const std::size_t n = buf.size();
  if (buf.advantages.size() != n)
    throw std::logic_error("advantages not computed");

  // advantage normalization per update
  double mean = 0.0;
  for (double a : buf.advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : buf.advantages) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n) + 1e-8;
  std::vector<double> norm_adv(n);
  for (std::size_t i = 0; i < n; ++i)
    norm_adv[i] = (buf.advantages[i] - mean) / stddev;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  UpdateStats stats;
  Eigen::VectorXd grad(net.num_parameters());
  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    rng.shuffle(order);
    // final partial minibatch (< batch_size) is dropped
    for (std::size_t start = 0; start + cfg.batch_size <= n;
         start += cfg.batch_size) {
      const int B = cfg.batch_size;
      Eigen::MatrixXd obs(buf.observations.rows(), B);
      std::vector<int> ga(B), qa(B);
      std::vector<double> lp(B), adv(B), ret(B);
      for (int b = 0; b < B; ++b) {
        const std::size_t i = order[start + b];
        obs.col(b) = buf.observations.col(i);
        ga[b] = buf.gate_actions[i];
        qa[b] = buf.qubit_actions[i];
        lp[b] = buf.log_probs[i];
        adv[b] = norm_adv[i];
        ret[b] = buf.returns[i];
      }
      grad.setZero();
      const double loss = ppo_minibatch_loss(net, obs, ga, qa, lp, adv, ret,
                                             cfg, &grad, &stats);
      if (!std::isfinite(loss))
        throw std::runtime_error("non-finite PPO loss; aborting update");
      const double gnorm = grad.norm();
      if (gnorm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / gnorm;
      adam.step(net.parameters(), grad);
    }
  }
  if (stats.minibatches > 0) {
    stats.policy_loss /= stats.minibatches;
    stats.value_loss /= stats.minibatches;
    stats.entropy /= stats.minibatches;
  }
  return stats;
}

struct BestCircuit {
  bool found = false;
  CircuitTensor tensor;
  CircuitMetrics metrics;
  double test_accuracy = 0.0;
  long found_at_step = 0;
};

struct TrainArtifacts {
  BestCircuit best;
  long steps = 0;
  long episodes = 0;
};

inline Eigen::VectorXd flatten_observation(const CircuitTensor& t) {
  Eigen::VectorXd v(t.bits.size());
  for (std::size_t i = 0; i < t.bits.size(); ++i) v[i] = t.bits[i];
  return v;
}

namespace detail {

inline void track_best(BestCircuit& best, const StepResult& res, long step) {
  if (!res.legal) return;
  const bool better =
      !best.found || res.p_current > best.test_accuracy ||
      (res.p_current == best.test_accuracy &&
       res.metrics.gates < best.metrics.gates);
  if (better) {
    best.found = true;
    best.tensor = res.observation;
    best.metrics = res.metrics;
    best.test_accuracy = res.p_current;
    best.found_at_step = step;
  }
}

}  // namespace detail

// Full PPO training run: alternating rollout collection and updates until
// `total_steps` environment steps, logging one row per step.
inline TrainArtifacts train_ppo(CircuitEnv& env, const PpoConfig& cfg,
                                std::uint64_t seed, MetricsLogger* log,
                                const std::string& run_id = "ppo",
                                const std::function<bool(const BestCircuit&)>&
                                    stop_early = nullptr) {
  const int obs_dim = static_cast<int>(env.tensor().bits.size());
  PolicyConfig pcfg;
  pcfg.obs_dim = obs_dim;
  pcfg.num_qubit_choices = env.action_space().num_qubit_choices();
  PolicyNetwork net(pcfg, seed);
  EigenAdam adam(net.num_parameters(), cfg.learning_rate);
  Rng rng(seed);

  TrainArtifacts art;
  Eigen::VectorXd obs = flatten_observation(env.reset());
  bool env_fresh = true;

  while (art.steps < cfg.total_steps) {
    RolloutBuffer buf;
    const int n = static_cast<int>(
        std::min<long>(cfg.n_steps, cfg.total_steps - art.steps));
    buf.observations.resize(obs_dim, n);
    for (int t = 0; t < n; ++t) {
      if (env.done()) {
        obs = flatten_observation(env.reset());
        env_fresh = true;
      }
      const SampledAction a = sample_action(net, obs, rng);
      const StepResult res = env.step(a.gate_idx, a.qubit_idx);
      env_fresh = false;
      ++art.steps;
      if (res.done) ++art.episodes;
      detail::track_best(art.best, res, art.steps);
      if (log)
        log->append({run_id, art.steps, art.episodes, res.reward,
                     res.p_current, res.metrics.gates, res.metrics.depth,
                     done_reason_name(res.done_reason)});

      buf.observations.col(t) = obs;
      buf.gate_actions.push_back(a.gate_idx);
      buf.qubit_actions.push_back(a.qubit_idx);
      buf.log_probs.push_back(a.log_prob);
      buf.rewards.push_back(res.reward);
      buf.dones.push_back(res.done ? 1 : 0);
      buf.values.push_back(a.value);
      obs = flatten_observation(res.observation);
      if (stop_early && art.best.found && stop_early(art.best)) {
        buf.observations.conservativeResize(obs_dim, t + 1);
        compute_gae(buf, cfg.gamma, cfg.gae_lambda, 0.0);
        return art;
      }
    }
    double last_value = 0.0;
    if (!buf.dones.back()) {
      if (env.done()) {
        obs = flatten_observation(env.reset());
        env_fresh = true;
      }
      Eigen::MatrixXd o(obs_dim, 1);
      o.col(0) = obs;
      last_value = net.forward(o).values[0];
    }
    compute_gae(buf, cfg.gamma, cfg.gae_lambda, last_value);
    ppo_update(net, adam, buf, cfg, rng);
  }
  (void)env_fresh;
  return art;
}

// Uniform-random baseline with identical logging and best tracking.
inline TrainArtifacts run_random_agent(CircuitEnv& env, long total_steps,
                                       std::uint64_t seed, MetricsLogger* log,
                                       const std::string& run_id = "random") {
  Rng rng(seed);
  TrainArtifacts art;
  env.reset();
  while (art.steps < total_steps) {
    if (env.done()) env.reset();
    const int ga =
        static_cast<int>(rng.uniform_index(env.action_space().num_gate_choices()));
    const int qa = static_cast<int>(
        rng.uniform_index(env.action_space().num_qubit_choices()));
    const StepResult res = env.step(ga, qa);
    ++art.steps;
    if (res.done) ++art.episodes;
    detail::track_best(art.best, res, art.steps);
    if (log)
      log->append({run_id, art.steps, art.episodes, res.reward, res.p_current,
                   res.metrics.gates, res.metrics.depth,
                   done_reason_name(res.done_reason)});
  }
  return art;
}

}  // namespace rlqas
