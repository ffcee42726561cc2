#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "agst/dataset.hpp"

namespace agst {
namespace {

constexpr int kMaxResamples = 10000;

std::vector<NodeId> sorted(std::vector<NodeId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

SplitSpec balanced_split(const DatasetBundle& bundle, const Balanced& mode, std::uint64_t seed) {
  if (mode.k == 0) throw Error("balanced split requires K >= 1");
  const std::size_t c = bundle.num_classes;
  std::vector<std::vector<NodeId>> by_class(c);
  for (std::size_t i = 0; i < bundle.labels.size(); ++i)
    if (bundle.labels[i] != kUnknownLabel) by_class[bundle.labels[i]].push_back(static_cast<NodeId>(i));

  const std::size_t need = mode.k + mode.val_per_class;
  for (std::size_t cls = 0; cls < c; ++cls)
    if (by_class[cls].size() < need)
      throw Error("class " + std::to_string(cls) + " has " + std::to_string(by_class[cls].size()) +
                  " labeled nodes, balanced split needs " + std::to_string(need));

  std::mt19937_64 rng(seed);
  SplitSpec split;
  split.seed = seed;
  for (auto& nodes : by_class) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    split.labeled.insert(split.labeled.end(), nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(mode.k));
    split.validation.insert(split.validation.end(), nodes.begin() + static_cast<std::ptrdiff_t>(mode.k),
                            nodes.begin() + static_cast<std::ptrdiff_t>(need));
    split.test.insert(split.test.end(), nodes.begin() + static_cast<std::ptrdiff_t>(need), nodes.end());
  }
  split.labeled = sorted(std::move(split.labeled));
  split.validation = sorted(std::move(split.validation));
  split.test = sorted(std::move(split.test));
  return split;
}

SplitSpec imbalanced_split(const DatasetBundle& bundle, const Imbalanced& mode, std::uint64_t seed) {
  if (!(mode.rate > 0.0 && mode.rate < 1.0)) throw Error("label rate must lie in (0, 1)");
  const std::size_t n = bundle.num_nodes();
  const auto count = static_cast<std::size_t>(std::ceil(mode.rate * static_cast<double>(n)));
  std::vector<NodeId> eligible;
  for (std::size_t i = 0; i < n; ++i)
    if (bundle.labels[i] != kUnknownLabel) eligible.push_back(static_cast<NodeId>(i));
  if (count < 1 || count > eligible.size())
    throw Error("label rate yields " + std::to_string(count) + " labeled nodes, " +
                std::to_string(eligible.size()) + " available");
  if (count < bundle.num_classes)
    throw Error("label rate yields fewer labeled nodes than classes");

  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    std::vector<NodeId> pool = eligible;
    std::mt19937_64 rng(s);
    std::shuffle(pool.begin(), pool.end(), rng);

    std::vector<bool> seen(bundle.num_classes, false);
    for (std::size_t i = 0; i < count; ++i) seen[bundle.labels[pool[i]]] = true;
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      spdlog::debug("imbalanced split seed {} misses a class, resampling with seed {}", s, s + 1);
      continue;
    }
    const std::size_t test_count = std::min(mode.test_size, pool.size() - count);
    if (test_count < mode.test_size)
      spdlog::warn("only {} nodes left for the test set (requested {})", test_count, mode.test_size);
    SplitSpec split;
    split.seed = s;
    split.labeled = sorted({pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count)});
    split.test = sorted({pool.begin() + static_cast<std::ptrdiff_t>(count),
                         pool.begin() + static_cast<std::ptrdiff_t>(count + test_count)});
    if (s != seed) spdlog::info("imbalanced split resampled: requested seed {}, used {}", seed, s);
    return split;
  }
  throw Error("could not draw an imbalanced split covering every class");
}

}  // namespace

SplitSpec make_split(const DatasetBundle& bundle, const SplitMode& mode, std::uint64_t seed) {
  return std::visit(
      [&](const auto& m) -> SplitSpec {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Balanced>) return balanced_split(bundle, m, seed);
        else if constexpr (std::is_same_v<M, Imbalanced>) return imbalanced_split(bundle, m, seed);
        else return balanced_split(bundle, Balanced{20, 30}, seed);
      },
      mode);
}

}  // namespace agst
