// metrics_log.hpp
// Append-only per-step training log with a versioned CSV schema. Rows are
// formatted deterministically so identical runs produce identical files.

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlqas {

struct MetricsRow {
  std::string run_id;
  long step = 0;
  long episode = 0;
  double reward = 0.0;
  double test_accuracy = 0.0;
  int gates = 0;
  int depth = 0;
  std::string done_reason;  // "none" while the episode is running
};

inline const char* kMetricsHeader =
    "run_id,step,episode,reward,test_accuracy,gates,depth,done_reason";

inline std::string format_metrics_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%ld,%ld,%.12g,%.12g,%d,%d,%s",
                r.run_id.c_str(), r.step, r.episode, r.reward,
                r.test_accuracy, r.gates, r.depth, r.done_reason.c_str());
  return buf;
}

class MetricsLogger {
 public:
  explicit MetricsLogger(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open metrics log: " + path);
    out_ << "# rlqas-metrics v1\n" << kMetricsHeader << "\n";
  }

  void append(const MetricsRow& r) {
    if (r.step <= last_step_)
      throw std::logic_error("metrics steps must be strictly increasing");
    last_step_ = r.step;
    out_ << format_metrics_row(r) << "\n";
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  long last_step_ = 0;
};

inline std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics log: " + path);
  std::vector<MetricsRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("run_id", 0) == 0)
      continue;
    std::istringstream ls(line);
    MetricsRow r;
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ls, tok, ','))
        throw std::runtime_error("short metrics row: " + line);
      return tok;
    };
    r.run_id = next();
    r.step = std::stol(next());
    r.episode = std::stol(next());
    r.reward = std::stod(next());
    r.test_accuracy = std::stod(next());
    r.gates = std::stoi(next());
    r.depth = std::stoi(next());
    r.done_reason = next();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace rlqas
