// dataset.hpp
// Iris and binary-digits loading, L2 normalization, one-hot labels,
// seeded stratified 70/30 splits and PCA dimensionality reduction.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rlqas/random.hpp"

namespace rlqas {

enum class Split { Train, Test };

struct Dataset {
  std::string name;
  std::vector<std::vector<double>> features;  // rows L2-normalized
  std::vector<std::vector<int>> labels_onehot;
  std::vector<int> labels;  // class index per sample
  std::vector<Split> split;
  int num_classes = 0;

  std::size_t num_samples() const { return features.size(); }
  std::size_t num_features() const {
    return features.empty() ? 0 : features[0].size();
  }

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }
};

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x original_dim, orthonormal rows
  double explained_variance_ratio = 0.0;

  Eigen::MatrixXd project(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean.transpose()) * components.transpose();
  }
};

namespace detail {

inline void l2_normalize_rows(std::vector<std::vector<double>>& rows) {
  for (auto& row : rows) {
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm <= 0.0) throw std::runtime_error("zero-norm feature row");
    for (double& v : row) v /= norm;
  }
}

// Seeded stratified split: per class, 70% train (rounded to nearest), rest
// test. Assignment order is shuffled per class with the split seed.
inline std::vector<Split> stratified_split(const std::vector<int>& labels,
                                           int num_classes,
                                           std::uint64_t seed) {
  std::vector<Split> out(labels.size(), Split::Test);
  Rng rng(seed ^ 0x5157415353504c54ULL);
  for (int c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    rng.shuffle(idx);
    const std::size_t n_train =
        static_cast<std::size_t>(std::lround(0.7 * idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      out[idx[i]] = i < n_train ? Split::Train : Split::Test;
  }
  return out;
}

// Column-separated text: feature values then an integer label per row;
// lines starting with '#' are comments.
inline std::pair<std::vector<std::vector<double>>, std::vector<int>>
load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file: " + path);
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.size() < 2) throw std::runtime_error("short row in " + path);
    labels.push_back(static_cast<int>(vals.back()));
    vals.pop_back();
    features.push_back(std::move(vals));
  }
  return {std::move(features), std::move(labels)};
}

inline void set_onehot(Dataset& d) {
  d.labels_onehot.assign(d.labels.size(),
                         std::vector<int>(d.num_classes, 0));
  for (std::size_t i = 0; i < d.labels.size(); ++i)
    d.labels_onehot[i][d.labels[i]] = 1;
}

}  // namespace detail

inline PcaModel fit_pca(const Eigen::MatrixXd& X, int k) {
  const int dim = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  if (k < 1 || k > std::min(dim, n))
    throw std::invalid_argument("k must be in [1, min(dim, num_samples)]");
  PcaModel m;
  m.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - m.mean.transpose();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  if (cov.trace() <= 1e-14)
    throw std::invalid_argument("degenerate input: zero variance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // eigenvalues ascending; take the top k in descending order
  m.components.resize(k, dim);
  double kept = 0.0;
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd comp = solver.eigenvectors().col(dim - 1 - i);
    // sign canonicalization: largest-magnitude entry positive
    int arg = 0;
    comp.cwiseAbs().maxCoeff(&arg);
    if (comp[arg] < 0) comp = -comp;
    m.components.row(i) = comp.transpose();
    kept += solver.eigenvalues()[dim - 1 - i];
  }
  m.explained_variance_ratio = kept / solver.eigenvalues().sum();
  return m;
}

inline Dataset load_iris(const std::string& path,
                         std::optional<std::pair<int, int>> class_filter,
                         std::uint64_t seed) {
  auto [features, raw_labels] = detail::load_table(path);
  Dataset d;
  std::map<int, int> remap;
  if (class_filter) {
    auto [a, b] = *class_filter;
    if (a == b || a < 0 || a > 2 || b < 0 || b > 2)
      throw std::invalid_argument("class filter must be two distinct labels in {0,1,2}");
    if (a > b) std::swap(a, b);
    remap = {{a, 0}, {b, 1}};
    d.name = "iris2_" + std::to_string(a) + std::to_string(b);
  } else {
    remap = {{0, 0}, {1, 1}, {2, 2}};
    d.name = "iris";
  }
  d.num_classes = static_cast<int>(remap.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto it = remap.find(raw_labels[i]);
    if (it == remap.end()) continue;
    d.features.push_back(features[i]);
    d.labels.push_back(it->second);
  }
  detail::l2_normalize_rows(d.features);
  detail::set_onehot(d);
  d.split = detail::stratified_split(d.labels, d.num_classes, seed);
  return d;
}

// Digits 0/1 from the 8x8 digits corpus (64 features): stratified split,
// PCA 64 -> 32 fit on the training split only, then per-row L2 normalization.
inline std::pair<Dataset, PcaModel> load_mnist2(const std::string& path,
                                                std::uint64_t seed,
                                                int pca_dim = 32) {
  auto [features, raw_labels] = detail::load_table(path);
  Dataset d;
  d.name = "mnist2";
  d.num_classes = 2;
  std::vector<std::vector<double>> raw;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (raw_labels[i] != 0 && raw_labels[i] != 1) continue;
    raw.push_back(features[i]);
    d.labels.push_back(raw_labels[i]);
  }
  d.split = detail::stratified_split(d.labels, d.num_classes, seed);

  const int dim = static_cast<int>(raw[0].size());
  Eigen::MatrixXd all(raw.size(), dim);
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (int j = 0; j < dim; ++j) all(i, j) = raw[i][j];

  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < d.split.size(); ++i)
    if (d.split[i] == Split::Train) train_rows.push_back(i);
  Eigen::MatrixXd train(train_rows.size(), dim);
  for (std::size_t i = 0; i < train_rows.size(); ++i)
    train.row(i) = all.row(train_rows[i]);

  PcaModel pca = fit_pca(train, pca_dim);
  Eigen::MatrixXd projected = pca.project(all);
  d.features.assign(raw.size(), std::vector<double>(pca_dim));
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (int j = 0; j < pca_dim; ++j) d.features[i][j] = projected(i, j);
  detail::l2_normalize_rows(d.features);
  detail::set_onehot(d);
  return {std::move(d), std::move(pca)};
}

}  // namespace rlqas
