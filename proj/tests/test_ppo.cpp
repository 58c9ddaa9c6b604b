// Policy network and PPO machinery: initialization, sampling, GAE oracles,
// the clipped surrogate (finite-differenced against the analytic gradient),
// bandit convergence and end-to-end reproducibility.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "rlqas/metrics_log.hpp"
#include "rlqas/policy.hpp"
#include "rlqas/ppo.hpp"

using namespace rlqas;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name) {
    path = fs::temp_directory_path() /
           (name + "." + std::to_string(::getpid()) + ".tmp");
    fs::remove(path);
  }
  ~TempFile() { fs::remove(path); }
  std::string str() const { return path.string(); }
};

PolicyConfig small_config(int obs_dim = 6, int qubit_choices = 2,
                          int hidden = 8) {
  PolicyConfig cfg;
  cfg.obs_dim = obs_dim;
  cfg.num_qubit_choices = qubit_choices;
  cfg.hidden = hidden;
  return cfg;
}

Eigen::VectorXd random_obs(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.uniform_index(2);
  return v;
}

}  // namespace

TEST_CASE("policy initialization") {
  SUBCASE("hidden layers are orthogonal with gain sqrt(2)") {
    PolicyNetwork net(small_config(6, 2, 16), 11);
    const Eigen::MatrixXd w2 = net.W2();
    const Eigen::MatrixXd gram = w2 * w2.transpose();
    CHECK((gram - 2.0 * Eigen::MatrixXd::Identity(16, 16)).norm() ==
          doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("head probabilities start near uniform") {
    PolicyNetwork net(small_config(8, 12, 64), 5);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd obs(8, 1);
      obs.col(0) = random_obs(8, rng);
      const PolicyForward f = net.forward(obs);
      for (int i = 0; i < 4; ++i)
        CHECK(f.gate_probs(i, 0) == doctest::Approx(0.25).epsilon(0.08));
      for (int i = 0; i < 12; ++i)
        CHECK(f.qubit_probs(i, 0) ==
              doctest::Approx(1.0 / 12.0).epsilon(0.08));
      CHECK(f.gate_probs.col(0).sum() == doctest::Approx(1.0));
      CHECK(f.qubit_probs.col(0).sum() == doctest::Approx(1.0));
    }
  }
  SUBCASE("sampling frequencies match the near-uniform head") {
    PolicyNetwork net(small_config(6, 4, 32), 21);
    Rng rng(17);
    const Eigen::VectorXd obs = Eigen::VectorXd::Zero(6);
    std::vector<int> gate_counts(4, 0), qubit_counts(4, 0);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const SampledAction a = sample_action(net, obs, rng);
      ++gate_counts[static_cast<std::size_t>(a.gate_idx)];
      ++qubit_counts[static_cast<std::size_t>(a.qubit_idx)];
    }
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(gate_counts[i] / double(n) - 0.25) < 0.02);
      CHECK(std::abs(qubit_counts[i] / double(n) - 0.25) < 0.02);
    }
  }
  SUBCASE("invalid configs rejected") {
    CHECK_THROWS(PolicyNetwork(small_config(0, 2), 1));
    CHECK_THROWS(PolicyNetwork(small_config(4, 0), 1));
  }
}

TEST_CASE("sampled log probability is the sum of both heads") {
  PolicyNetwork net(small_config(6, 5), 9);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd obs = random_obs(6, rng);
    const SampledAction a = sample_action(net, obs, rng);
    Eigen::MatrixXd o(6, 1);
    o.col(0) = obs;
    const PolicyForward f = net.forward(o);
    const double expect = std::log(f.gate_probs(a.gate_idx, 0)) +
                          std::log(f.qubit_probs(a.qubit_idx, 0));
    CHECK(a.log_prob == doctest::Approx(expect).epsilon(1e-12));
    CHECK(a.value == doctest::Approx(f.values[0]));
  }
}

TEST_CASE("greedy sampling is deterministic and maximal") {
  PolicyNetwork net(small_config(6, 5), 13);
  Rng rng(1);
  const Eigen::VectorXd obs = random_obs(6, rng);
  const SampledAction a = sample_action(net, obs, rng, /*greedy=*/true);
  const SampledAction b = sample_action(net, obs, rng, /*greedy=*/true);
  CHECK(a.gate_idx == b.gate_idx);
  CHECK(a.qubit_idx == b.qubit_idx);
  Eigen::MatrixXd o(6, 1);
  o.col(0) = obs;
  const PolicyForward f = net.forward(o);
  for (int i = 0; i < 4; ++i)
    CHECK(f.gate_probs(a.gate_idx, 0) >= f.gate_probs(i, 0));
}

TEST_CASE("checkpoint round trip") {
  TempFile f("rlqas_policy_ckpt");
  PolicyNetwork net(small_config(6, 3), 2);
  net.save(f.str());
  PolicyNetwork other(small_config(6, 3), 99);
  CHECK(other.parameters() != net.parameters());
  other.load(f.str());
  CHECK(other.parameters() == net.parameters());
  SUBCASE("shape mismatch rejected") {
    PolicyNetwork wrong(small_config(7, 3), 1);
    CHECK_THROWS(wrong.load(f.str()));
  }
  SUBCASE("truncated file rejected") {
    fs::resize_file(f.path, fs::file_size(f.path) / 2);
    PolicyNetwork same(small_config(6, 3), 1);
    CHECK_THROWS(same.load(f.str()));
  }
}

TEST_CASE("generalized advantage estimation") {
  auto make_buffer = [](const std::vector<double>& rewards,
                        const std::vector<double>& values,
                        const std::vector<std::uint8_t>& dones) {
    RolloutBuffer buf;
    buf.rewards = rewards;
    buf.values = values;
    buf.dones = dones;
    buf.observations.resize(1, static_cast<int>(rewards.size()));
    return buf;
  };

  SUBCASE("single terminal step") {
    RolloutBuffer buf = make_buffer({2.0}, {0.5}, {1});
    compute_gae(buf, 0.99, 0.95, 123.0);  // last_value must be masked
    CHECK(buf.advantages[0] == doctest::Approx(1.5));
    CHECK(buf.returns[0] == doctest::Approx(2.0));
  }
  SUBCASE("bootstrap through a non-terminal tail") {
    RolloutBuffer buf = make_buffer({1.0}, {0.5}, {0});
    compute_gae(buf, 0.9, 0.95, 2.0);
    CHECK(buf.advantages[0] == doctest::Approx(1.0 + 0.9 * 2.0 - 0.5));
  }
  SUBCASE("lambda 1 recovers Monte-Carlo returns") {
    RolloutBuffer buf =
        make_buffer({1.0, 2.0, 3.0}, {0.3, 0.6, 0.9}, {0, 0, 1});
    const double g = 0.9;
    compute_gae(buf, g, 1.0, 0.0);
    const double ret0 = 1.0 + g * 2.0 + g * g * 3.0;
    const double ret1 = 2.0 + g * 3.0;
    CHECK(buf.returns[0] == doctest::Approx(ret0));
    CHECK(buf.returns[1] == doctest::Approx(ret1));
    CHECK(buf.returns[2] == doctest::Approx(3.0));
    CHECK(buf.advantages[0] == doctest::Approx(ret0 - 0.3));
  }
  SUBCASE("gamma 0 reduces to one-step TD errors") {
    RolloutBuffer buf =
        make_buffer({1.0, -2.0, 0.5}, {0.2, 0.4, 0.6}, {0, 0, 0});
    compute_gae(buf, 0.0, 0.95, 5.0);
    CHECK(buf.advantages[0] == doctest::Approx(0.8));
    CHECK(buf.advantages[1] == doctest::Approx(-2.4));
    CHECK(buf.advantages[2] == doctest::Approx(-0.1));
  }
  SUBCASE("terminals isolate episodes") {
    RolloutBuffer two =
        make_buffer({1.0, 5.0, 7.0}, {0.0, 0.0, 0.0}, {1, 0, 1});
    compute_gae(two, 0.9, 1.0, 0.0);
    // episode one is just the first step; its advantage ignores what follows
    CHECK(two.advantages[0] == doctest::Approx(1.0));
    CHECK(two.returns[1] == doctest::Approx(5.0 + 0.9 * 7.0));
  }
  SUBCASE("empty buffer rejected") {
    RolloutBuffer buf;
    CHECK_THROWS(compute_gae(buf, 0.99, 0.95, 0.0));
  }
}

TEST_CASE("surrogate loss identities at ratio one") {
  PolicyNetwork net(small_config(5, 3), 31);
  Rng rng(8);
  const int B = 16;
  Eigen::MatrixXd obs(5, B);
  std::vector<int> ga(B), qa(B);
  std::vector<double> lp(B), adv(B), ret(B);
  double adv_mean = 0.0;
  for (int b = 0; b < B; ++b) {
    obs.col(b) = random_obs(5, rng);
    const SampledAction a = sample_action(net, obs.col(b), rng);
    ga[b] = a.gate_idx;
    qa[b] = a.qubit_idx;
    lp[b] = a.log_prob;  // current policy: ratio is exactly one
    adv[b] = rng.uniform(-2.0, 2.0);
    adv_mean += adv[b] / B;
    ret[b] = a.value;  // value error zero
  }
  PpoConfig cfg;
  cfg.ent_coef = 0.0;
  cfg.vf_coef = 0.0;
  UpdateStats stats;
  const double loss =
      ppo_minibatch_loss(net, obs, ga, qa, lp, adv, ret, cfg, nullptr, &stats);
  CHECK(loss == doctest::Approx(-adv_mean).epsilon(1e-10));
  CHECK(stats.policy_loss == doctest::Approx(-adv_mean).epsilon(1e-10));
  CHECK(stats.value_loss == doctest::Approx(0.0));
  // near-uniform heads: joint entropy approaches ln 4 + ln 3
  CHECK(stats.entropy ==
        doctest::Approx(std::log(4.0) + std::log(3.0)).epsilon(0.01));
}

TEST_CASE("analytic gradient matches finite differences of the full loss") {
  PolicyNetwork net(small_config(5, 3, 8), 77);
  Rng rng(12);
  const int B = 6;
  Eigen::MatrixXd obs(5, B);
  std::vector<int> ga(B), qa(B);
  std::vector<double> lp(B), adv(B), ret(B);
  for (int b = 0; b < B; ++b) {
    obs.col(b) = random_obs(5, rng);
    const SampledAction a = sample_action(net, obs.col(b), rng);
    ga[b] = a.gate_idx;
    qa[b] = a.qubit_idx;
    lp[b] = a.log_prob;  // ratio one keeps the surrogate smooth locally
    adv[b] = rng.uniform(-1.0, 1.0);
    ret[b] = rng.uniform(-1.0, 1.0);
  }
  PpoConfig cfg;  // production coefficients: all three terms active

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.num_parameters());
  ppo_minibatch_loss(net, obs, ga, qa, lp, adv, ret, cfg, &grad);

  const double h = 1e-6;
  int checked = 0;
  for (std::size_t k = 0; k < net.num_parameters();
       k += 1 + net.num_parameters() / 200) {
    const double saved = net.parameters()[k];
    net.parameters()[k] = saved + h;
    const double up =
        ppo_minibatch_loss(net, obs, ga, qa, lp, adv, ret, cfg, nullptr);
    net.parameters()[k] = saved - h;
    const double dn =
        ppo_minibatch_loss(net, obs, ga, qa, lp, adv, ret, cfg, nullptr);
    net.parameters()[k] = saved;
    const double fd = (up - dn) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(grad[k])});
    CHECK(std::abs(grad[k] - fd) / scale < 1e-4);
    ++checked;
  }
  CHECK(checked >= 150);
}

TEST_CASE("clipping activates away from ratio one") {
  PolicyNetwork net(small_config(5, 3), 41);
  Rng rng(6);
  Eigen::MatrixXd obs(5, 1);
  obs.col(0) = random_obs(5, rng);
  const SampledAction a = sample_action(net, obs.col(0), rng);
  PpoConfig cfg;
  cfg.ent_coef = 0.0;
  cfg.vf_coef = 0.0;
  const std::vector<int> ga = {a.gate_idx}, qa = {a.qubit_idx};
  const std::vector<double> ret = {a.value};
  // old log prob much smaller than current: ratio >> 1 + clip
  const std::vector<double> lp = {a.log_prob - 1.0};
  const std::vector<double> adv_pos = {1.0};
  const double loss = ppo_minibatch_loss(net, obs, ga, qa, lp, adv_pos, ret,
                                         cfg, nullptr);
  // positive advantage, ratio e > 1.2: surrogate pins to the clipped value
  CHECK(loss == doctest::Approx(-(1.0 + cfg.clip_range)).epsilon(1e-10));
  // and the gradient through the policy heads vanishes
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.num_parameters());
  ppo_minibatch_loss(net, obs, ga, qa, lp, adv_pos, ret, cfg, &grad);
  CHECK(grad.norm() == doctest::Approx(0.0));
}

TEST_CASE("ppo solves a contextual bandit") {
  // One-step episodes, constant observation; action (gate 2, qubit 0) pays 1,
  // everything else pays 0. The policy must concentrate on the paying arm.
  auto run_bandit = [](double ent_coef, std::uint64_t seed) {
    PolicyNetwork net(small_config(4, 2, 16), seed);
    PpoConfig cfg;
    cfg.batch_size = 32;
    cfg.n_epochs = 4;
    cfg.ent_coef = ent_coef;
    EigenAdam adam(net.num_parameters(), 0.01);
    Rng rng(seed);
    const Eigen::VectorXd obs = Eigen::VectorXd::Ones(4);
    for (int iter = 0; iter < 120; ++iter) {
      const int n = 64;
      RolloutBuffer buf;
      buf.observations.resize(4, n);
      for (int t = 0; t < n; ++t) {
        const SampledAction a = sample_action(net, obs, rng);
        buf.observations.col(t) = obs;
        buf.gate_actions.push_back(a.gate_idx);
        buf.qubit_actions.push_back(a.qubit_idx);
        buf.log_probs.push_back(a.log_prob);
        buf.rewards.push_back(a.gate_idx == 2 && a.qubit_idx == 0 ? 1.0 : 0.0);
        buf.dones.push_back(1);
        buf.values.push_back(a.value);
      }
      compute_gae(buf, 0.99, 0.95, 0.0);
      ppo_update(net, adam, buf, cfg, rng);
    }
    Eigen::MatrixXd o(4, 1);
    o.col(0) = obs;
    return net.forward(o);
  };

  const PolicyForward greedy = run_bandit(0.0, 100);
  CHECK(greedy.gate_probs(2, 0) > 0.9);
  CHECK(greedy.qubit_probs(0, 0) > 0.9);

  SUBCASE("a dominant entropy bonus keeps the policy near uniform") {
    const PolicyForward diffuse = run_bandit(5.0, 100);
    CHECK(diffuse.gate_probs(2, 0) < greedy.gate_probs(2, 0));
    double ent = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double p = diffuse.gate_probs(i, 0);
      if (p > 0) ent -= p * std::log(p);
    }
    CHECK(ent > 1.0);  // close to ln 4, far from the greedy solution
  }
}

TEST_CASE("ppo update rejects stale buffers and non-finite input") {
  PolicyNetwork net(small_config(4, 2), 3);
  EigenAdam adam(net.num_parameters(), 0.003);
  Rng rng(5);
  PpoConfig cfg;
  RolloutBuffer buf;
  buf.rewards = {1.0};
  buf.values = {0.0};
  buf.dones = {1};
  buf.observations.resize(4, 1);
  SUBCASE("advantages must be computed first") {
    CHECK_THROWS(ppo_update(net, adam, buf, cfg, rng));
  }
}

TEST_CASE("training on the circuit environment is reproducible") {
  const Dataset d = load_iris("data/iris.txt", {{0, 1}}, 42);
  OptConfig opt;
  opt.epochs = 2;
  opt.seeds = {1};
  PpoConfig cfg;
  cfg.n_steps = 64;
  cfg.batch_size = 32;
  cfg.n_epochs = 2;
  cfg.total_steps = 192;

  auto run_once = [&](const std::string& tag) {
    TempFile cache_file("rlqas_ppo_cache_" + tag);
    TempFile log_file("rlqas_ppo_log_" + tag);
    EvalCache cache(cache_file.str());
    CircuitEnv env(d, opt, RewardConfig::for_depth(4, 1.01), 4, cache);
    MetricsLogger log(log_file.str());
    const TrainArtifacts art = train_ppo(env, cfg, 7, &log, "t");
    log.flush();
    std::ifstream in(log_file.str());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return std::make_pair(art, text);
  };

  const auto [art1, log1] = run_once("a");
  const auto [art2, log2] = run_once("b");
  CHECK(art1.steps == 192);
  CHECK(art1.episodes >= 1);
  CHECK(art1.best.found);
  CHECK(art1.best.test_accuracy >= 0.0);
  CHECK(art1.best.test_accuracy <= 1.0);
  CHECK(log1 == log2);
  CHECK(art1.best.test_accuracy == art2.best.test_accuracy);
  CHECK(art1.best.found_at_step == art2.best.found_at_step);

  SUBCASE("the log matches the schema") {
    TempFile cache_file("rlqas_ppo_cache_s");
    TempFile log_file("rlqas_ppo_log_s");
    EvalCache cache(cache_file.str());
    CircuitEnv env(d, opt, RewardConfig::for_depth(4, 1.01), 4, cache);
    MetricsLogger log(log_file.str());
    train_ppo(env, cfg, 7, &log, "t");
    log.flush();
    const std::vector<MetricsRow> rows = read_metrics(log_file.str());
    REQUIRE(rows.size() == 192);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].step == static_cast<long>(i) + 1);
      CHECK(std::isfinite(rows[i].reward));
      CHECK(rows[i].test_accuracy >= 0.0);
      CHECK(rows[i].test_accuracy <= 1.0);
    }
  }
}

TEST_CASE("random baseline is seeded and logged identically") {
  const Dataset d = load_iris("data/iris.txt", {{0, 1}}, 42);
  OptConfig opt;
  opt.epochs = 2;
  opt.seeds = {1};
  auto run_once = [&](std::uint64_t seed, const std::string& tag) {
    TempFile cache_file("rlqas_rand_cache_" + tag);
    EvalCache cache(cache_file.str());
    CircuitEnv env(d, opt, RewardConfig::for_depth(4, 1.01), 4, cache);
    return run_random_agent(env, 100, seed, nullptr);
  };
  const TrainArtifacts a = run_once(5, "a");
  const TrainArtifacts b = run_once(5, "b");
  const TrainArtifacts c = run_once(6, "c");
  CHECK(a.steps == 100);
  CHECK(a.best.found);
  CHECK(a.best.test_accuracy == b.best.test_accuracy);
  CHECK(a.best.found_at_step == b.best.found_at_step);
  CHECK(a.episodes == b.episodes);
  // a different seed explores a different trajectory
  CHECK((c.best.found_at_step != a.best.found_at_step ||
         c.episodes != a.episodes));
}

TEST_CASE("early stopping honors the callback") {
  const Dataset d = load_iris("data/iris.txt", {{0, 1}}, 42);
  OptConfig opt;
  opt.epochs = 2;
  opt.seeds = {1};
  TempFile cache_file("rlqas_stop_cache");
  EvalCache cache(cache_file.str());
  CircuitEnv env(d, opt, RewardConfig::for_depth(4, 1.01), 4, cache);
  PpoConfig cfg;
  cfg.n_steps = 64;
  cfg.total_steps = 10000;
  const TrainArtifacts art = train_ppo(
      env, cfg, 3, nullptr, "t",
      [](const BestCircuit& best) { return best.test_accuracy > 0.0; });
  CHECK(art.steps < 10000);
  CHECK(art.best.found);
  CHECK(art.best.test_accuracy > 0.0);
}
