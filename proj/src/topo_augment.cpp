#include "agst/topo_augment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "agst/kernels.hpp"
#include "agst/teacher.hpp"

namespace agst {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double pair_probability(const DenseMatrix& probs, NodeId i, NodeId j) {
  return sigmoid(kernels::active().dot(probs.row(i).data(), probs.row(j).data(), probs.cols()));
}

// Strict weak order: higher probability first, then lexicographic (i, j).
bool add_before(const EdgeCandidate& a, const EdgeCandidate& b) {
  if (a.probability != b.probability) return a.probability > b.probability;
  return std::tie(a.i, a.j) < std::tie(b.i, b.j);
}

// Lower probability first, then lexicographic (i, j).
bool remove_before(const EdgeCandidate& a, const EdgeCandidate& b) {
  if (a.probability != b.probability) return a.probability < b.probability;
  return std::tie(a.i, a.j) < std::tie(b.i, b.j);
}

std::vector<std::vector<NodeId>> group_by_label(std::span<const int> hard, std::size_t classes) {
  std::vector<std::vector<NodeId>> groups(classes);
  for (std::size_t v = 0; v < hard.size(); ++v) groups[static_cast<std::size_t>(hard[v])].push_back(static_cast<NodeId>(v));
  return groups;
}

// Calls fn(i, j) for every same-label non-edge with i < j.
template <typename Fn>
void for_each_addition(std::span<const int> hard, const SparseGraph& graph, std::size_t classes, Fn&& fn) {
  for (const auto& members : group_by_label(hard, classes)) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      const NodeId i = members[a];
      const auto nb = graph.neighbors(i);
      auto it = nb.begin();
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const NodeId j = members[b];
        while (it != nb.end() && *it < j) ++it;
        if (it != nb.end() && *it == j) continue;
        fn(i, j);
      }
    }
  }
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(beta_add >= 0.0 && beta_add <= 1.0)) throw Error("edge addition ratio must lie in [0, 1]");
  if (!(beta_remove >= 0.0 && beta_remove <= 1.0)) throw Error("edge removal ratio must lie in [0, 1]");
}

std::vector<double> edge_probability(const DenseMatrix& probs, std::span<const std::pair<NodeId, NodeId>> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i >= probs.rows() || j >= probs.rows())
      throw Error("pair (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
    out.push_back(pair_probability(probs, i, j));
  }
  return out;
}

CandidateSets generate_candidates(std::span<const int> hard_labels, const SparseGraph& graph,
                                  const DenseMatrix& probs) {
  require_shape(hard_labels.size() == graph.num_nodes() && probs.rows() == graph.num_nodes(),
                "hard labels / predictions vs graph size");
  CandidateSets out;
  for_each_addition(hard_labels, graph, probs.cols(), [&](NodeId i, NodeId j) {
    out.additions.push_back({i, j, pair_probability(probs, i, j), false});
  });
  for (const Edge& e : graph.edges()) out.removals.push_back({e.u, e.v, pair_probability(probs, e.u, e.v), true});
  return out;
}

AugmentResult augment_topology(const SparseGraph& original, const DenseMatrix& probs, const AugmentConfig& cfg) {
  cfg.validate();
  require_shape(probs.rows() == original.num_nodes(), "predictions vs graph size");
  const std::size_t m = original.num_edges();
  const auto add_quota = static_cast<std::size_t>(std::floor(cfg.beta_add * static_cast<double>(m)));
  const auto remove_quota = static_cast<std::size_t>(std::floor(cfg.beta_remove * static_cast<double>(m)));
  const std::vector<int> hard = argmax_rows(probs);

  AugmentResult result;

  // Bounded heap keeps the best `add_quota` candidates; top() is the worst kept.
  if (add_quota > 0) {
    std::priority_queue<EdgeCandidate, std::vector<EdgeCandidate>, decltype(&add_before)> heap(add_before);
    for_each_addition(hard, original, probs.cols(), [&](NodeId i, NodeId j) {
      ++result.addition_candidates;
      const EdgeCandidate cand{i, j, pair_probability(probs, i, j), false};
      if (heap.size() < add_quota) {
        heap.push(cand);
      } else if (add_before(cand, heap.top())) {
        heap.pop();
        heap.push(cand);
      }
    });
    result.added.reserve(heap.size());
    while (!heap.empty()) {
      result.added.push_back(heap.top());
      heap.pop();
    }
    std::reverse(result.added.begin(), result.added.end());
    if (result.added.size() < add_quota)
      spdlog::warn("edge addition quota {} exceeds the {} available candidates", add_quota, result.added.size());
  }

  if (remove_quota > 0) {
    std::vector<EdgeCandidate> existing;
    existing.reserve(m);
    for (const Edge& e : original.edges()) existing.push_back({e.u, e.v, pair_probability(probs, e.u, e.v), true});
    const std::size_t take = std::min(remove_quota, existing.size());
    std::partial_sort(existing.begin(), existing.begin() + static_cast<std::ptrdiff_t>(take), existing.end(),
                      remove_before);
    result.removed.assign(existing.begin(), existing.begin() + static_cast<std::ptrdiff_t>(take));
  }

  std::vector<Edge> removed_edges;
  removed_edges.reserve(result.removed.size());
  for (const auto& e : result.removed) removed_edges.push_back({e.i, e.j});
  std::sort(removed_edges.begin(), removed_edges.end());

  std::vector<Edge> edges;
  edges.reserve(m + result.added.size());
  std::set_difference(original.edges().begin(), original.edges().end(), removed_edges.begin(), removed_edges.end(),
                      std::back_inserter(edges));
  for (const auto& e : result.added) edges.push_back({e.i, e.j});
  std::sort(edges.begin(), edges.end());
  result.graph = SparseGraph::from_canonical_edges(original.num_nodes(), std::move(edges));
  return result;
}

void write_augment_tsv(const AugmentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "op\ti\tj\tprobability\n";
  for (const auto& e : result.added) out << "add\t" << e.i << '\t' << e.j << '\t' << e.probability << '\n';
  for (const auto& e : result.removed) out << "remove\t" << e.i << '\t' << e.j << '\t' << e.probability << '\n';
}

}  // namespace agst
