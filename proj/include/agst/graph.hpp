#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "agst/matrix.hpp"

namespace agst {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u;  // u < v
  NodeId v;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected simple graph. Edges are stored once with u < v, sorted; the CSR
/// adjacency holds both directions with unit weights and no self-loops.
class SparseGraph {
 public:
  SparseGraph() = default;

  /// Builds from arbitrary pairs: symmetrizes, drops self-loops and duplicates.
  /// Throws if an endpoint is >= n.
  static SparseGraph from_pairs(std::size_t n, std::span<const std::pair<NodeId, NodeId>> pairs,
                                std::size_t* duplicates_dropped = nullptr);
  /// Edges must already be canonical (u < v, sorted, unique).
  static SparseGraph from_canonical_edges(std::size_t n, std::vector<Edge> edges);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const CsrMatrix& adjacency() const { return adj_; }

  std::size_t degree(NodeId i) const { return adj_.offsets[i + 1] - adj_.offsets[i]; }
  std::span<const std::uint32_t> neighbors(NodeId i) const {
    return {adj_.indices.data() + adj_.offsets[i], degree(i)};
  }
  bool has_edge(NodeId a, NodeId b) const;

  friend bool operator==(const SparseGraph& x, const SparseGraph& y) {
    return x.n_ == y.n_ && x.edges_ == y.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  CsrMatrix adj_;
};

/// S = D~^{-1/2} (A + I) D~^{-1/2}, stored in CSR including the diagonal.
struct NormalizedOperator {
  CsrMatrix s;
  std::size_t num_nodes() const { return s.rows; }
};

NormalizedOperator normalize_adjacency(const SparseGraph& graph);

/// Exact sparse-dense product S * M.
DenseMatrix spmm(const NormalizedOperator& op, const DenseMatrix& m);

}  // namespace agst
