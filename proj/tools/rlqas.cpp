// rlqas command-line tool: experiment runner, cache analysis, baseline
// comparison, cost landscapes and SVG rendering of report CSVs.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "rlqas/analysis.hpp"
#include "rlqas/cache.hpp"
#include "rlqas/circuit_io.hpp"
#include "rlqas/config.hpp"
#include "rlqas/env.hpp"
#include "rlqas/metrics_log.hpp"
#include "rlqas/ppo.hpp"
#include "rlqas/svg.hpp"

namespace fs = std::filesystem;
using namespace rlqas;

namespace {

std::string resolve_cache_path(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("RLQAS_CACHE"); env && *env) return env;
  if (!cfg.cache_path.empty()) return cfg.cache_path;
  return cfg.out_dir + "/" + cfg.task + ".cache";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

ExperimentConfig build_config(const std::string& config_path,
                              const std::string& task, std::uint64_t seed,
                              const std::string& out_dir) {
  ExperimentConfig cfg;
  if (!config_path.empty())
    cfg = load_config(config_path);
  else if (!task.empty())
    cfg = default_config(task);
  else
    throw CLI::ValidationError("either --config or --task is required");
  if (!task.empty() && config_path.empty()) cfg.task = task;
  if (seed != 0) cfg.agent_seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return cfg;
}

int cmd_run(const ExperimentConfig& cfg, bool random_agent) {
  fs::create_directories(cfg.out_dir);
  const Dataset data = load_task_dataset(cfg);
  EvalCache cache(resolve_cache_path(cfg));
  CircuitEnv env(data, cfg.opt, cfg.reward_config(), cfg.max_depth, cache);

  const std::string run_id =
      (random_agent ? "random_" : "ppo_") + cfg.task + "_s" +
      std::to_string(cfg.agent_seed);
  const std::string log_path = cfg.out_dir + "/" + run_id + "_metrics.csv";
  MetricsLogger log(log_path);

  const auto t0 = std::chrono::steady_clock::now();
  TrainArtifacts art;
  if (random_agent)
    art = run_random_agent(env, cfg.ppo.total_steps, cfg.agent_seed, &log,
                           run_id);
  else
    art = train_ppo(env, cfg.ppo, cfg.agent_seed, &log, run_id);
  log.flush();
  const double wall_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (art.best.found) {
    const GateSequence best = decode(art.best.tensor);
    write_circuit_file(cfg.out_dir + "/" + run_id + "_best_circuit.txt", best,
                       art.best.test_accuracy);
  }
  nlohmann::json meta = {
      {"run_id", run_id},
      {"task", cfg.task},
      {"agent", random_agent ? "random" : "ppo"},
      {"seed", cfg.agent_seed},
      {"steps", art.steps},
      {"episodes", art.episodes},
      {"wall_hours", wall_sec / 3600.0},
      {"unique_circuits_cached", cache.size()},
      {"best_test_accuracy", art.best.found ? art.best.test_accuracy : 0.0},
      {"best_found_at_step", art.best.found_at_step}};
  write_text(cfg.out_dir + "/" + run_id + "_meta.json", meta.dump(2) + "\n");
  write_text(cfg.out_dir + "/" + run_id + "_config.cfg",
             serialize_config(cfg));

  std::cout << "run " << run_id << ": " << art.steps << " steps, "
            << art.episodes << " episodes, best test accuracy "
            << (art.best.found ? art.best.test_accuracy : 0.0) << " ("
            << art.best.metrics.gates << " gates, depth "
            << art.best.metrics.depth << ")\n";
  return 0;
}

int cmd_analyze(const ExperimentConfig& cfg, double threshold) {
  fs::create_directories(cfg.out_dir);
  EvalCache cache(resolve_cache_path(cfg));
  const MacroReport rep = analyze_macro(cache.entries(), threshold);
  write_text(cfg.out_dir + "/macro_accuracy_depth.csv",
             accuracy_depth_csv(rep));
  write_text(cfg.out_dir + "/macro_gate_usage.csv", gate_usage_csv(rep));
  write_text(cfg.out_dir + "/macro_transitions.csv", transitions_csv(rep));
  write_text(cfg.out_dir + "/macro_depth_distribution.csv",
             depth_distribution_csv(rep));
  std::cout << "analyzed " << rep.total_unique << " unique circuits, "
            << rep.above_threshold << " at/above threshold " << threshold
            << "\n";
  if (rep.above_threshold == 0)
    std::cout << "note: no circuits met the threshold; reports are empty\n";
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const std::string& best_path,
                const std::vector<int>& layers) {
  fs::create_directories(cfg.out_dir);
  const Dataset data = load_task_dataset(cfg);
  const int qubits = CircuitEnv::qubits_for(data);
  std::vector<ComparisonRow> rows;
  if (!best_path.empty()) {
    const GateSequence best = read_circuit_file(best_path);
    rows.push_back(evaluate_architecture("RL-QAS", best, data, cfg.opt));
  }
  for (int l : layers)
    rows.push_back(evaluate_architecture("SEL(" + std::to_string(l) + ")",
                                         sel_ansatz(qubits, l), data,
                                         cfg.opt));
  const std::string csv = comparison_csv(rows);
  write_text(cfg.out_dir + "/comparison_" + cfg.task + ".csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_landscape(const ExperimentConfig& cfg, const std::string& circuit_path,
                  int pa, int pb, double lo, double hi, int grid) {
  fs::create_directories(cfg.out_dir);
  const Dataset data = load_task_dataset(cfg);
  const GateSequence seq = read_circuit_file(circuit_path);
  const EvalResult trained = train_vqc(seq, data, cfg.opt);
  const std::string csv = cost_landscape_csv(
      seq, trained.best_seed().trained_params, data, pa, pb, lo, hi, grid);
  const std::string out = cfg.out_dir + "/landscape_" + cfg.task + "_p" +
                          std::to_string(pa) + "_p" + std::to_string(pb) +
                          ".csv";
  write_text(out, csv);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_plot(const std::string& metrics_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::vector<MetricsRow> rows = read_metrics(metrics_path);
  Series acc{"test accuracy", "accuracy", {}, {}};
  Series rew{"episode reward", "reward", {}, {}};
  Series gates{"number of gates", "gates", {}, {}};
  Series depth{"circuit depth", "depth", {}, {}};
  for (const MetricsRow& r : rows) {
    const double s = static_cast<double>(r.step);
    acc.xs.push_back(s);
    acc.ys.push_back(r.test_accuracy);
    rew.xs.push_back(s);
    rew.ys.push_back(r.reward);
    gates.xs.push_back(s);
    gates.ys.push_back(r.gates);
    depth.xs.push_back(s);
    depth.ys.push_back(r.depth);
  }
  const std::string svg = svg_line_panels({acc, rew, gates, depth});
  const std::string out =
      out_dir + "/" + fs::path(metrics_path).stem().string() + ".svg";
  write_text(out, svg);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_cache_inspect(const std::string& path, int top) {
  EvalCache cache(path);
  const auto& entries = cache.entries();
  std::cout << "cache " << path << ": " << entries.size() << " entries\n";
  std::vector<std::pair<double, std::uint64_t>> ranked;
  for (const auto& [key, e] : entries)
    ranked.emplace_back(e.result.aggregate_test_acc, key);
  std::sort(ranked.rbegin(), ranked.rend());
  for (int i = 0; i < top && i < static_cast<int>(ranked.size()); ++i) {
    const CacheEntry& e = entries.at(ranked[i].second);
    const CircuitMetrics m = metrics(decode(e.tensor));
    std::cout << "  key=" << std::hex << ranked[i].second << std::dec
              << " test_acc=" << e.result.aggregate_test_acc
              << " gates=" << m.gates << " depth=" << m.depth << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL-driven architecture search for variational quantum "
               "classifiers"};
  app.require_subcommand(1);

  std::string config_path, task, out_dir, best_path, circuit_path,
      metrics_path, cache_path;
  std::uint64_t seed = 0;
  bool random_agent = false;
  double threshold = 0.9;
  std::vector<int> layers{1, 2};
  int pa = 0, pb = 1, grid = 25, top = 10;
  double lo = -M_PI, hi = M_PI;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file path");
    sub->add_option("--task", task,
                    "task name: iris2_01 iris2_02 iris2_12 iris mnist2");
    sub->add_option("--seed", seed, "agent seed (0 = config default)");
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* run = app.add_subcommand("run", "run a search experiment");
  add_common(run);
  run->add_flag("--random", random_agent, "use the uniform-random baseline");

  CLI::App* analyze =
      app.add_subcommand("analyze", "macro-analysis of the eval cache");
  add_common(analyze);
  analyze->add_option("--threshold", threshold,
                      "test-accuracy threshold for pattern reports");

  CLI::App* compare =
      app.add_subcommand("compare", "RL-QAS vs SEL comparison table");
  add_common(compare);
  compare->add_option("--best", best_path, "best-circuit export file");
  compare->add_option("--layers", layers, "SEL layer counts to train");

  CLI::App* landscape =
      app.add_subcommand("landscape", "cost landscape over a parameter pair");
  add_common(landscape);
  landscape->add_option("--circuit", circuit_path, "circuit export file")
      ->required();
  landscape->add_option("--pa", pa, "first parameter index");
  landscape->add_option("--pb", pb, "second parameter index");
  landscape->add_option("--lo", lo, "grid lower bound");
  landscape->add_option("--hi", hi, "grid upper bound");
  landscape->add_option("--grid", grid, "grid points per axis");

  CLI::App* plot = app.add_subcommand("plot", "render a metrics log as SVG");
  plot->add_option("--metrics", metrics_path, "metrics CSV path")->required();
  plot->add_option("--out", out_dir, "output directory")->default_val("out");

  CLI::App* cache_cmd = app.add_subcommand("cache", "cache utilities");
  CLI::App* inspect = cache_cmd->add_subcommand("inspect", "list cache stats");
  inspect->add_option("--path", cache_path, "cache file path")->required();
  inspect->add_option("--top", top, "show the N best circuits");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(build_config(config_path, task, seed, out_dir),
                     random_agent);
    if (analyze->parsed())
      return cmd_analyze(build_config(config_path, task, seed, out_dir),
                         threshold);
    if (compare->parsed())
      return cmd_compare(build_config(config_path, task, seed, out_dir),
                         best_path, layers);
    if (landscape->parsed())
      return cmd_landscape(build_config(config_path, task, seed, out_dir),
                           circuit_path, pa, pb, lo, hi, grid);
    if (plot->parsed()) return cmd_plot(metrics_path, out_dir);
    if (inspect->parsed()) return cmd_cache_inspect(cache_path, top);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
