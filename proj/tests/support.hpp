#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "agst/dataset.hpp"
#include "agst/graph.hpp"
#include "agst/matrix.hpp"

namespace agst::testing {

/// Erdos-Renyi graph G(n, p).
inline SparseGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (coin(rng)) pairs.emplace_back(i, j);
  return SparseGraph::from_pairs(n, pairs);
}

inline DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed, double density = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(density);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = keep(rng) ? normal(rng) : 0.0;
  return m;
}

/// Rows are probability vectors drawn from a softmax of Gaussian logits.
inline DenseMatrix random_probs(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 2.0) {
  DenseMatrix m = random_dense(rows, cols, seed);
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (double& v : m.row(i)) sum += (v = std::exp(scale * v));
    for (double& v : m.row(i)) v /= sum;
  }
  return m;
}

/// D^-1/2 (A + I) D^-1/2 computed densely.
inline DenseMatrix dense_normalized(const SparseGraph& g) {
  const std::size_t n = g.num_nodes();
  DenseMatrix a(n, n);
  for (const Edge& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(d[i] * d[j]);
  return a;
}

inline DenseMatrix dense_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("agst_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace agst::testing
