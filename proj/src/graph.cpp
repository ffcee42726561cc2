#include "agst/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace agst {

SparseGraph SparseGraph::from_pairs(std::size_t n,
                                    std::span<const std::pair<NodeId, NodeId>> pairs,
                                    std::size_t* duplicates_dropped) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n)
      throw Error("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                  ") out of range for n=" + std::to_string(n));
    if (a == b) continue;
    edges.push_back(a < b ? Edge{a, b} : Edge{b, a});
  }
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  if (duplicates_dropped != nullptr)
    *duplicates_dropped = static_cast<std::size_t>(edges.end() - last);
  edges.erase(last, edges.end());
  return from_canonical_edges(n, std::move(edges));
}

SparseGraph SparseGraph::from_canonical_edges(std::size_t n, std::vector<Edge> edges) {
  SparseGraph g;
  g.n_ = n;
  g.edges_ = std::move(edges);

  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : g.edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  CsrMatrix& adj = g.adj_;
  adj.rows = adj.cols = n;
  adj.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] = adj.offsets[i] + deg[i];
  adj.indices.resize(adj.offsets[n]);
  adj.values.assign(adj.offsets[n], 1.0);

  // Edges are sorted by (u, v): each row receives its lower neighbours (as v)
  // before its higher ones (as u), in increasing order within each pass.
  std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  for (const Edge& e : g.edges_) adj.indices[cursor[e.v]++] = e.u;
  for (const Edge& e : g.edges_) adj.indices[cursor[e.u]++] = e.v;
  return g;
}

bool SparseGraph::has_edge(NodeId a, NodeId b) const {
  if (a >= n_ || b >= n_) return false;
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

NormalizedOperator normalize_adjacency(const SparseGraph& graph) {
  const std::size_t n = graph.num_nodes();
  const CsrMatrix& adj = graph.adjacency();

  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(graph.degree(static_cast<NodeId>(i)) + 1));

  NormalizedOperator op;
  CsrMatrix& s = op.s;
  s.rows = s.cols = n;
  s.offsets.resize(n + 1);
  s.indices.reserve(adj.nnz() + n);
  s.values.reserve(adj.nnz() + n);
  s.offsets[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      const std::uint32_t j = adj.indices[e];
      if (!diag_done && j > i) {
        s.indices.push_back(static_cast<std::uint32_t>(i));
        s.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
        diag_done = true;
      }
      s.indices.push_back(j);
      s.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!diag_done) {
      s.indices.push_back(static_cast<std::uint32_t>(i));
      s.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    s.offsets[i + 1] = s.indices.size();
  }
  return op;
}

DenseMatrix spmm(const NormalizedOperator& op, const DenseMatrix& m) { return matmul(op.s, m); }

}  // namespace agst
