#include "agst/teacher.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "agst/kernels.hpp"

namespace agst {

void LpConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("LP alpha must lie strictly inside (0, 1)");
  if (steps < 1) throw Error("LP steps must be >= 1");
}

DenseMatrix seed_label_matrix(const DatasetBundle& bundle, const SplitSpec& split) {
  DenseMatrix y(bundle.num_nodes(), bundle.num_classes);
  for (NodeId v : split.labeled) {
    const int cls = bundle.labels.at(v);
    if (cls == kUnknownLabel) throw Error("labeled node " + std::to_string(v) + " has no gold label");
    y(v, static_cast<std::size_t>(cls)) = 1.0;
  }
  return y;
}

namespace {

// next = alpha * S * cur + (1 - alpha) * seed
void lp_step(const NormalizedOperator& op, const DenseMatrix& seed, double alpha, const DenseMatrix& cur,
             DenseMatrix& next) {
  const auto& k = kernels::active();
  const std::size_t c = seed.cols();
  next = DenseMatrix(seed.rows(), c);
  k.axpy(1.0 - alpha, seed.data(), next.data(), next.size());
  const CsrMatrix& s = op.s;
  // Fold alpha into the per-row accumulation to keep a single pass over S.
  for (std::size_t i = 0; i < s.rows; ++i) {
    double* out = next.data() + i * c;
    for (std::size_t e = s.offsets[i]; e < s.offsets[i + 1]; ++e)
      k.axpy(alpha * s.values[e], cur.data() + static_cast<std::size_t>(s.indices[e]) * c, out, c);
  }
}

}  // namespace

DenseMatrix propagate(const NormalizedOperator& op, const DenseMatrix& seed, const LpConfig& cfg) {
  cfg.validate();
  require_shape(seed.rows() == op.num_nodes(), "label matrix rows vs operator size");
  DenseMatrix cur = seed;
  DenseMatrix next;
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    lp_step(op, seed, cfg.alpha, cur, next);
    std::swap(cur, next);
  }
  return cur;
}

SoftLabels propagate_labels(const NormalizedOperator& op, const DatasetBundle& bundle, const SplitSpec& split,
                            const LpConfig& cfg) {
  std::vector<bool> present(bundle.num_classes, false);
  for (NodeId v : split.labeled)
    if (bundle.labels.at(v) != kUnknownLabel) present[bundle.labels[v]] = true;
  for (std::size_t c = 0; c < present.size(); ++c)
    if (!present[c]) throw Error("class " + std::to_string(c) + " is absent from the labeled set");
  return {propagate(op, seed_label_matrix(bundle, split), cfg), false};
}

DenseMatrix propagate_to_tolerance(const NormalizedOperator& op, const DenseMatrix& seed, double alpha,
                                   double tol, std::size_t max_steps, std::size_t* steps_taken) {
  LpConfig{alpha, 1}.validate();
  DenseMatrix cur = seed;
  DenseMatrix next;
  std::size_t t = 0;
  while (t < max_steps) {
    lp_step(op, seed, alpha, cur, next);
    ++t;
    const double delta = max_abs_diff(cur, next);
    std::swap(cur, next);
    if (delta < tol) break;
  }
  if (steps_taken != nullptr) *steps_taken = t;
  return cur;
}

SoftLabels closed_form_oracle(const NormalizedOperator& op, const DenseMatrix& seed, double alpha) {
  LpConfig{alpha, 1}.validate();
  const std::size_t n = op.num_nodes();
  if (n > 2000) throw Error("closed-form oracle is limited to n <= 2000");
  require_shape(seed.rows() == n, "label matrix rows vs operator size");

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = op.s.offsets[i]; e < op.s.offsets[i + 1]; ++e)
      system(static_cast<Eigen::Index>(i), op.s.indices[e]) -= alpha * op.s.values[e];
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(seed.cols()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < seed.cols(); ++j)
      rhs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (1.0 - alpha) * seed(i, j);

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::MatrixXd sol = lu.solve(rhs);

  SoftLabels out{DenseMatrix(n, seed.cols()), false};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < seed.cols(); ++j)
      out.matrix(i, j) = sol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

SoftLabels closed_form_oracle(const NormalizedOperator& op, const DatasetBundle& bundle, const SplitSpec& split,
                              double alpha) {
  return closed_form_oracle(op, seed_label_matrix(bundle, split), alpha);
}

SoftLabels to_distribution(const SoftLabels& soft) {
  SoftLabels out{soft.matrix, true};
  DenseMatrix& m = out.matrix;
  const double uniform = m.cols() > 0 ? 1.0 / static_cast<double>(m.cols()) : 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum < 1e-12) {
      std::fill(row.begin(), row.end(), uniform);
    } else {
      for (double& v : row) v /= sum;
    }
  }
  return out;
}

std::vector<int> argmax_rows(const DenseMatrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace agst
