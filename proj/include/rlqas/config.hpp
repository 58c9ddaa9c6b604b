// config.hpp
// Per-task experiment configuration with defaults matching the published
// hyperparameter table, serialized as flat key = value text with sections.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlqas/env.hpp"
#include "rlqas/inner_loop.hpp"
#include "rlqas/ppo.hpp"

namespace rlqas {

struct ExperimentConfig {
  std::string task = "iris2_01";  // iris2_01 | iris2_02 | iris2_12 | iris | mnist2
  int max_depth = 4;
  double performance_threshold = 1.0;
  bool use_extended_horizon = true;
  PpoConfig ppo;
  OptConfig opt;
  std::uint64_t split_seed = 42;
  std::uint64_t agent_seed = 1;
  std::string data_dir = "data";
  std::string cache_path;  // default: <out>/<task>.cache
  std::string out_dir = "out";

  RewardConfig reward_config() const {
    RewardConfig r = RewardConfig::for_depth(max_depth, performance_threshold);
    r.use_extended_horizon = use_extended_horizon;
    return r;
  }
};

inline ExperimentConfig default_config(const std::string& task) {
  ExperimentConfig c;
  c.task = task;
  if (task == "iris2_01" || task == "iris2_02" || task == "iris2_12") {
    c.max_depth = 4;
    c.performance_threshold = 1.0;
    c.ppo.n_steps = 128;
    c.ppo.total_steps = 100000;
    c.opt.batch_size = 16;
  } else if (task == "iris") {
    c.max_depth = 4;
    c.performance_threshold = 1.0;
    c.ppo.n_steps = 512;
    c.ppo.total_steps = 200000;
    c.opt.batch_size = 20;
  } else if (task == "mnist2") {
    c.max_depth = 7;
    c.performance_threshold = 0.95;
    c.ppo.n_steps = 1024;
    c.ppo.total_steps = 400000;
    c.opt.batch_size = 20;
  } else {
    throw std::invalid_argument("unknown task: " + task);
  }
  return c;
}

inline Dataset load_task_dataset(const ExperimentConfig& c) {
  const std::string iris = c.data_dir + "/iris.txt";
  if (c.task == "iris2_01")
    return load_iris(iris, std::pair{0, 1}, c.split_seed);
  if (c.task == "iris2_02")
    return load_iris(iris, std::pair{0, 2}, c.split_seed);
  if (c.task == "iris2_12")
    return load_iris(iris, std::pair{1, 2}, c.split_seed);
  if (c.task == "iris") return load_iris(iris, std::nullopt, c.split_seed);
  if (c.task == "mnist2")
    return load_mnist2(c.data_dir + "/digits.txt", c.split_seed).first;
  throw std::invalid_argument("unknown task: " + c.task);
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "task = " << c.task << "\n";
  os << "max_depth = " << c.max_depth << "\n";
  os << "performance_threshold = "
     << detail::fmt_double(c.performance_threshold) << "\n";
  os << "use_extended_horizon = " << (c.use_extended_horizon ? 1 : 0) << "\n";
  os << "split_seed = " << c.split_seed << "\n";
  os << "agent_seed = " << c.agent_seed << "\n";
  os << "data_dir = " << c.data_dir << "\n";
  os << "cache_path = " << c.cache_path << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  os << "\n[ppo]\n";
  os << "learning_rate = " << detail::fmt_double(c.ppo.learning_rate) << "\n";
  os << "n_steps = " << c.ppo.n_steps << "\n";
  os << "batch_size = " << c.ppo.batch_size << "\n";
  os << "n_epochs = " << c.ppo.n_epochs << "\n";
  os << "gamma = " << detail::fmt_double(c.ppo.gamma) << "\n";
  os << "gae_lambda = " << detail::fmt_double(c.ppo.gae_lambda) << "\n";
  os << "clip_range = " << detail::fmt_double(c.ppo.clip_range) << "\n";
  os << "ent_coef = " << detail::fmt_double(c.ppo.ent_coef) << "\n";
  os << "vf_coef = " << detail::fmt_double(c.ppo.vf_coef) << "\n";
  os << "max_grad_norm = " << detail::fmt_double(c.ppo.max_grad_norm) << "\n";
  os << "total_steps = " << c.ppo.total_steps << "\n";
  os << "\n[inner_loop]\n";
  os << "learning_rate = " << detail::fmt_double(c.opt.learning_rate) << "\n";
  os << "epochs = " << c.opt.epochs << "\n";
  os << "batch_size = " << c.opt.batch_size << "\n";
  os << "init_lo = " << detail::fmt_double(c.opt.init_lo) << "\n";
  os << "init_hi = " << detail::fmt_double(c.opt.init_hi) << "\n";
  os << "aggregate = "
     << (c.opt.aggregate == SeedAggregate::BestTestAccuracy ? "best" : "mean")
     << "\n";
  os << "seeds =";
  for (auto s : c.opt.seeds) os << " " << s;
  os << "\n";
  return os.str();
}

inline ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line, section;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#' || line[first] == ';') continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string::npos)
        throw std::runtime_error("unterminated section: " + line);
      section = line.substr(first + 1, close - first - 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("expected key = value: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[section + "." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() || it->second.empty() ? nullptr : &it->second;
  };

  ExperimentConfig c;
  if (const auto* v = get("experiment.task")) c = default_config(*v);
  if (const auto* v = get("experiment.max_depth")) c.max_depth = std::stoi(*v);
  if (const auto* v = get("experiment.performance_threshold"))
    c.performance_threshold = std::stod(*v);
  if (const auto* v = get("experiment.use_extended_horizon"))
    c.use_extended_horizon = std::stoi(*v) != 0;
  if (const auto* v = get("experiment.split_seed")) c.split_seed = std::stoull(*v);
  if (const auto* v = get("experiment.agent_seed")) c.agent_seed = std::stoull(*v);
  if (const auto* v = get("experiment.data_dir")) c.data_dir = *v;
  if (const auto* v = get("experiment.cache_path")) c.cache_path = *v;
  if (const auto* v = get("experiment.out_dir")) c.out_dir = *v;
  if (const auto* v = get("ppo.learning_rate")) c.ppo.learning_rate = std::stod(*v);
  if (const auto* v = get("ppo.n_steps")) c.ppo.n_steps = std::stoi(*v);
  if (const auto* v = get("ppo.batch_size")) c.ppo.batch_size = std::stoi(*v);
  if (const auto* v = get("ppo.n_epochs")) c.ppo.n_epochs = std::stoi(*v);
  if (const auto* v = get("ppo.gamma")) c.ppo.gamma = std::stod(*v);
  if (const auto* v = get("ppo.gae_lambda")) c.ppo.gae_lambda = std::stod(*v);
  if (const auto* v = get("ppo.clip_range")) c.ppo.clip_range = std::stod(*v);
  if (const auto* v = get("ppo.ent_coef")) c.ppo.ent_coef = std::stod(*v);
  if (const auto* v = get("ppo.vf_coef")) c.ppo.vf_coef = std::stod(*v);
  if (const auto* v = get("ppo.max_grad_norm"))
    c.ppo.max_grad_norm = std::stod(*v);
  if (const auto* v = get("ppo.total_steps")) c.ppo.total_steps = std::stol(*v);
  if (const auto* v = get("inner_loop.learning_rate"))
    c.opt.learning_rate = std::stod(*v);
  if (const auto* v = get("inner_loop.epochs")) c.opt.epochs = std::stoi(*v);
  if (const auto* v = get("inner_loop.batch_size"))
    c.opt.batch_size = std::stoi(*v);
  if (const auto* v = get("inner_loop.init_lo")) c.opt.init_lo = std::stod(*v);
  if (const auto* v = get("inner_loop.init_hi")) c.opt.init_hi = std::stod(*v);
  if (const auto* v = get("inner_loop.aggregate"))
    c.opt.aggregate = *v == "mean" ? SeedAggregate::MeanTestAccuracy
                                   : SeedAggregate::BestTestAccuracy;
  if (const auto* v = get("inner_loop.seeds")) {
    std::istringstream ss(*v);
    c.opt.seeds.clear();
    std::uint32_t s;
    while (ss >> s) c.opt.seeds.push_back(s);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_config(in);
}

}  // namespace rlqas
