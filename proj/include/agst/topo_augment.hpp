#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "agst/graph.hpp"
#include "agst/matrix.hpp"

namespace agst {

struct EdgeCandidate {
  NodeId i;  // i < j
  NodeId j;
  double probability;
  bool existing;
};

struct AugmentConfig {
  double beta_add = 0.4;
  double beta_remove = 0.2;
  void validate() const;
};

/// sigmoid(p_i . p_j) for each pair. Throws on an out-of-range index.
std::vector<double> edge_probability(const DenseMatrix& probs, std::span<const std::pair<NodeId, NodeId>> pairs);

struct CandidateSets {
  std::vector<EdgeCandidate> additions;  // same hard label, not an edge
  std::vector<EdgeCandidate> removals;   // every existing edge
};

/// Enumerates candidates with probabilities, grouping nodes by hard label.
/// Intended for inspection and tests; augment_topology streams the same
/// candidates without materializing them.
CandidateSets generate_candidates(std::span<const int> hard_labels, const SparseGraph& graph,
                                  const DenseMatrix& probs);

struct AugmentResult {
  SparseGraph graph;
  std::vector<EdgeCandidate> added;    // sorted by decreasing probability
  std::vector<EdgeCandidate> removed;  // sorted by increasing probability
  std::size_t addition_candidates = 0;
};

/// Adds the floor(beta_add * m) most probable same-label non-edges and removes
/// the floor(beta_remove * m) least probable existing edges of `original`.
/// Ties are broken by lexicographic (i, j).
AugmentResult augment_topology(const SparseGraph& original, const DenseMatrix& probs, const AugmentConfig& cfg);

/// TSV lines `op<TAB>i<TAB>j<TAB>probability` with op in {add, remove}.
void write_augment_tsv(const AugmentResult& result, const std::filesystem::path& path);

}  // namespace agst
