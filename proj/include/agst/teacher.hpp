#pragma once

#include <cstddef>
#include <vector>

#include "agst/dataset.hpp"
#include "agst/graph.hpp"

namespace agst {

/// Propagated label scores, one row per node. `normalized` rows sum to one.
struct SoftLabels {
  DenseMatrix matrix;
  bool normalized = false;
};

struct LpConfig {
  /// Propagation weight; 1 - alpha is the teleport (restart) probability.
  double alpha = 0.9;
  std::size_t steps = 10;

  void validate() const;
};

/// One-hot rows for the labeled nodes of `split`, zero rows elsewhere.
DenseMatrix seed_label_matrix(const DatasetBundle& bundle, const SplitSpec& split);

/// Y(t+1) = alpha * S * Y(t) + (1 - alpha) * Y(0), run for cfg.steps steps.
/// Requires every class to appear in the labeled set.
SoftLabels propagate_labels(const NormalizedOperator& op, const DatasetBundle& bundle,
                            const SplitSpec& split, const LpConfig& cfg);

/// Same iteration on an explicit seed matrix; no class-coverage check.
DenseMatrix propagate(const NormalizedOperator& op, const DenseMatrix& seed, const LpConfig& cfg);

/// Iterates until the max-norm change between steps drops below `tol` (or
/// `max_steps` is hit). Test helper; production runs use a fixed step count.
DenseMatrix propagate_to_tolerance(const NormalizedOperator& op, const DenseMatrix& seed, double alpha,
                                   double tol, std::size_t max_steps, std::size_t* steps_taken = nullptr);

/// Dense solve of (1 - alpha) (I - alpha S)^{-1} Y. Only for small graphs (n <= 2000).
SoftLabels closed_form_oracle(const NormalizedOperator& op, const DenseMatrix& seed, double alpha);
SoftLabels closed_form_oracle(const NormalizedOperator& op, const DatasetBundle& bundle,
                              const SplitSpec& split, double alpha);

/// Row-normalizes; rows with sum < 1e-12 become uniform.
SoftLabels to_distribution(const SoftLabels& soft);

/// Row argmax, lowest index on ties.
std::vector<int> argmax_rows(const DenseMatrix& m);

}  // namespace agst
