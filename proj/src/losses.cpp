#include <algorithm>
#include <cmath>
#include <string>

#include "agst/kernels.hpp"
#include "agst/student.hpp"

namespace agst {
namespace {

constexpr double kLogFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

double reduction_scale(Reduction r, std::size_t count) {
  return r == Reduction::Mean && count > 0 ? 1.0 / static_cast<double>(count) : 1.0;
}

// logits_j = z . c_j / tau, softmax-normalized with a max shift.
void similarity_into(std::span<const double> z, const Prototypes& protos, double tau, std::span<double> out) {
  const auto& k = kernels::active();
  const std::size_t c = protos.num_classes();
  for (std::size_t j = 0; j < c; ++j) out[j] = k.dot(z.data(), protos.matrix.row(j).data(), z.size()) / tau;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

}  // namespace

LossGrad loss_ce_labeled(const DenseMatrix& probs, std::span<const int> labels, std::span<const NodeId> nodes,
                         Reduction reduction) {
  if (nodes.empty()) throw Error("labeled cross-entropy needs a non-empty labeled set");
  const std::size_t c = probs.cols();
  LossGrad out{0.0, DenseMatrix(probs.rows(), c)};
  const double scale = reduction_scale(reduction, nodes.size());
  for (NodeId v : nodes) {
    const int y = labels[v];
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw Error("node " + std::to_string(v) + " has no gold label");
    out.value -= safe_log(probs(v, static_cast<std::size_t>(y)));
    for (std::size_t j = 0; j < c; ++j) out.grad(v, j) = scale * probs(v, j);
    out.grad(v, static_cast<std::size_t>(y)) -= scale;
  }
  out.value *= scale;
  return out;
}

LossGrad loss_ce_unlabeled(const DenseMatrix& probs, const SoftLabels& soft, std::span<const NodeId> nodes,
                           Reduction reduction) {
  if (!soft.normalized) throw Error("unlabeled cross-entropy needs normalized soft labels");
  require_shape(soft.matrix.rows() == probs.rows() && soft.matrix.cols() == probs.cols(),
                "soft labels vs predictions");
  const std::size_t c = probs.cols();
  LossGrad out{0.0, DenseMatrix(probs.rows(), c)};
  const double scale = reduction_scale(reduction, nodes.size());
  for (NodeId v : nodes) {
    for (std::size_t j = 0; j < c; ++j) {
      const double t = soft.matrix(v, j);
      if (t != 0.0) out.value -= t * safe_log(probs(v, j));
      out.grad(v, j) = scale * (probs(v, j) - t);
    }
  }
  out.value *= scale;
  return out;
}

Prototypes compute_prototypes(const DenseMatrix& z_momentum, std::span<const int> labels,
                              std::span<const NodeId> labeled, std::size_t num_classes) {
  const std::size_t h = z_momentum.cols();
  Prototypes protos{DenseMatrix(num_classes, h)};
  std::vector<std::size_t> counts(num_classes, 0);
  const auto& k = kernels::active();
  for (NodeId v : labeled) {
    const auto y = static_cast<std::size_t>(labels[v]);
    k.axpy(1.0, z_momentum.row(v).data(), protos.matrix.row(y).data(), h);
    ++counts[y];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw Error("class " + std::to_string(c) + " has no labeled node for its prototype");
    for (double& v : protos.matrix.row(c)) v /= static_cast<double>(counts[c]);
  }
  return protos;
}

std::vector<double> similarity_distribution(std::span<const double> z, const Prototypes& protos, double tau) {
  if (!(tau > 0.0)) throw Error("temperature must be positive");
  require_shape(z.size() == protos.matrix.cols(), "embedding width vs prototype width");
  std::vector<double> out(protos.num_classes());
  similarity_into(z, protos, tau, out);
  return out;
}

PseudoLabelSet filter_pseudo_labels(const SoftLabels& soft, const DenseMatrix& z_momentum, const Prototypes& protos,
                                    double tau, std::span<const NodeId> unlabeled) {
  const std::size_t c = protos.num_classes();
  if (c < 2) throw Error("pseudo-label filtering needs at least two classes");
  if (!(tau > 0.0)) throw Error("temperature must be positive");
  PseudoLabelSet out;
  out.soft = soft.normalized ? soft : to_distribution(soft);
  out.hard = argmax_rows(out.soft.matrix);
  const double threshold = 1.0 / static_cast<double>(c);
  std::vector<double> s(c);
  for (NodeId v : unlabeled) {
    similarity_into(z_momentum.row(v), protos, tau, s);
    if (s[static_cast<std::size_t>(out.hard[v])] > threshold) out.kept.push_back(v);
  }
  std::sort(out.kept.begin(), out.kept.end());
  return out;
}

LossGrad loss_contrastive(const DenseMatrix& z, const Prototypes& protos, const PseudoLabelSet& pls, double tau,
                          Reduction reduction) {
  if (!(tau > 0.0)) throw Error("temperature must be positive");
  const std::size_t h = z.cols();
  const std::size_t c = protos.num_classes();
  require_shape(h == protos.matrix.cols(), "embedding width vs prototype width");
  LossGrad out{0.0, DenseMatrix(z.rows(), h)};
  if (pls.kept.empty()) return out;

  const auto& k = kernels::active();
  const double scale = reduction_scale(reduction, pls.kept.size());
  std::vector<double> s(c);
  for (NodeId v : pls.kept) {
    const auto y = static_cast<std::size_t>(pls.hard[v]);
    similarity_into(z.row(v), protos, tau, s);
    out.value -= safe_log(s[y]);
    // d/dz = (sum_j s_j c_j - c_y) / tau
    double* g = out.grad.row(v).data();
    for (std::size_t j = 0; j < c; ++j) k.axpy(scale * s[j] / tau, protos.matrix.row(j).data(), g, h);
    k.axpy(-scale / tau, protos.matrix.row(y).data(), g, h);
  }
  out.value *= scale;
  return out;
}

}  // namespace agst
