#pragma once

#include <cstdint>

#include "agst/dataset.hpp"

namespace agst {

/// Planted-partition graph generator used by tests, the toy acceptance
/// scenario and `agst synth`.
struct ClusterGraphOptions {
  std::size_t nodes = 40;
  std::size_t classes = 2;
  std::size_t features = 8;
  /// Expected same-class neighbours per node.
  double intra_degree = 4.0;
  /// Inter-class edges added, as a fraction of the final edge count.
  double noise_edge_fraction = 0.1;

  enum class Features { Gaussian, SparseBinary } feature_kind = Features::Gaussian;
  /// Gaussian: distance of each class mean from the origin along its own axis.
  double separation = 4.0;
  double feature_stddev = 1.0;
  /// SparseBinary: probability a word of the node's own topic / of another topic is present.
  double topic_word_prob = 0.08;
  double background_word_prob = 0.01;

  std::uint64_t seed = 1;
};

DatasetBundle make_cluster_graph(const ClusterGraphOptions& options);

}  // namespace agst
