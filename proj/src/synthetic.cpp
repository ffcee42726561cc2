#include "agst/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace agst {

DatasetBundle make_cluster_graph(const ClusterGraphOptions& o) {
  if (o.classes < 1 || o.nodes < o.classes) throw Error("cluster graph needs nodes >= classes >= 1");
  if (o.noise_edge_fraction < 0.0 || o.noise_edge_fraction >= 1.0)
    throw Error("noise edge fraction must lie in [0, 1)");
  std::mt19937_64 rng(o.seed);

  DatasetBundle bundle;
  bundle.num_classes = o.classes;
  bundle.labels.resize(o.nodes);
  std::vector<std::vector<NodeId>> members(o.classes);
  for (std::size_t i = 0; i < o.nodes; ++i) {
    bundle.labels[i] = static_cast<int>(i % o.classes);
    members[i % o.classes].push_back(static_cast<NodeId>(i));
  }

  std::set<std::pair<NodeId, NodeId>> edges;
  const auto add = [&](NodeId a, NodeId b) {
    if (a == b) return false;
    return edges.emplace(std::min(a, b), std::max(a, b)).second;
  };
  // Ring inside each class keeps every class connected; random chords add density.
  for (const auto& m : members)
    for (std::size_t t = 0; m.size() > 1 && t < m.size(); ++t) add(m[t], m[(t + 1) % m.size()]);
  for (const auto& m : members) {
    if (m.size() < 3) continue;
    const double p = std::max(0.0, o.intra_degree - 2.0) / static_cast<double>(m.size() - 1);
    std::bernoulli_distribution coin(std::min(1.0, p));
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m.size(); ++b)
        if (coin(rng)) add(m[a], m[b]);
  }
  if (o.classes > 1 && o.noise_edge_fraction > 0.0) {
    const std::size_t clean = edges.size();
    const auto noisy = static_cast<std::size_t>(
        std::llround(o.noise_edge_fraction * static_cast<double>(clean) / (1.0 - o.noise_edge_fraction)));
    std::uniform_int_distribution<std::size_t> pick(0, o.nodes - 1);
    std::size_t added = 0;
    while (added < noisy) {
      const auto a = static_cast<NodeId>(pick(rng));
      const auto b = static_cast<NodeId>(pick(rng));
      if (bundle.labels[a] == bundle.labels[b]) continue;
      if (add(a, b)) ++added;
    }
  }
  std::vector<std::pair<NodeId, NodeId>> pairs(edges.begin(), edges.end());
  bundle.graph = SparseGraph::from_pairs(o.nodes, pairs);

  DenseMatrix x(o.nodes, o.features);
  if (o.feature_kind == ClusterGraphOptions::Features::Gaussian) {
    std::normal_distribution<double> noise(0.0, o.feature_stddev);
    for (std::size_t i = 0; i < o.nodes; ++i)
      for (std::size_t j = 0; j < o.features; ++j) {
        const bool own_axis = j % o.classes == static_cast<std::size_t>(bundle.labels[i]);
        x(i, j) = (own_axis ? o.separation : 0.0) + noise(rng);
      }
  } else {
    std::bernoulli_distribution topic(o.topic_word_prob);
    std::bernoulli_distribution background(o.background_word_prob);
    for (std::size_t i = 0; i < o.nodes; ++i)
      for (std::size_t j = 0; j < o.features; ++j) {
        const bool own_topic = j % o.classes == static_cast<std::size_t>(bundle.labels[i]);
        x(i, j) = (own_topic ? topic(rng) : background(rng)) ? 1.0 : 0.0;
      }
  }
  bundle.features = CsrMatrix::from_dense(x);
  bundle.validate();
  return bundle;
}

}  // namespace agst
