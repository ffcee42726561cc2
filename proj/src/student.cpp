#include <algorithm>
#include <cmath>

#include "agst/kernels.hpp"
#include "agst/student.hpp"

namespace agst {
namespace {

Linear make_linear(std::size_t in, std::size_t out, std::mt19937_64* rng) {
  Linear l{DenseMatrix(in, out), std::vector<double>(out, 0.0)};
  if (rng == nullptr) return l;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : l.weight.values()) w = u(*rng);
  for (double& b : l.bias) b = u(*rng);
  return l;
}

void add_bias(DenseMatrix& m, const std::vector<double>& bias) {
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m.rows(); ++i) k.axpy(1.0, bias.data(), m.row(i).data(), m.cols());
}

bool finite(const Linear& l) {
  return l.weight.all_finite() &&
         std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

StudentParams StudentParams::initialize(std::size_t features, std::size_t hidden, std::size_t classes,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  StudentParams p;
  p.encoder.hidden = make_linear(features, hidden, &rng);
  p.encoder.output = make_linear(hidden, hidden, &rng);
  p.head = make_linear(hidden, classes, &rng);
  p.momentum_encoder = p.encoder;
  return p;
}

StudentParams StudentParams::zeros(std::size_t features, std::size_t hidden, std::size_t classes) {
  StudentParams p;
  p.encoder.hidden = make_linear(features, hidden, nullptr);
  p.encoder.output = make_linear(hidden, hidden, nullptr);
  p.head = make_linear(hidden, classes, nullptr);
  p.momentum_encoder = p.encoder;
  return p;
}

bool StudentParams::all_finite() const {
  return finite(encoder.hidden) && finite(encoder.output) && finite(head) && finite(momentum_encoder.hidden) &&
         finite(momentum_encoder.output);
}

std::vector<std::span<double>> encoder_tensors(Encoder& e) {
  return {e.hidden.weight.values(), e.hidden.bias, e.output.weight.values(), e.output.bias};
}

std::vector<std::span<double>> trainable_tensors(Encoder& encoder, Linear& head) {
  auto out = encoder_tensors(encoder);
  out.emplace_back(head.weight.values());
  out.emplace_back(head.bias);
  return out;
}

void softmax_rows(DenseMatrix& logits) {
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

DenseMatrix encode(const Encoder& encoder, const CsrMatrix& x, double dropout, std::mt19937_64* dropout_rng) {
  require_shape(x.cols == encoder.hidden.in_dim(), "feature columns vs encoder input");
  DenseMatrix h = matmul(x, encoder.hidden.weight);
  add_bias(h, encoder.hidden.bias);
  for (double& v : h.values()) v = std::max(v, 0.0);
  if (dropout_rng != nullptr && dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout);
    const double scale = 1.0 / (1.0 - dropout);
    for (double& v : h.values()) v = keep(*dropout_rng) ? v * scale : 0.0;
  }
  DenseMatrix z = matmul(h, encoder.output.weight);
  add_bias(z, encoder.output.bias);
  return z;
}

ForwardResult forward(const StudentParams& params, const CsrMatrix& x, bool training, double dropout,
                      std::mt19937_64& rng) {
  ForwardResult out;
  out.z = encode(params.encoder, x, dropout, training ? &rng : nullptr);
  out.probs = matmul(out.z, params.head.weight);
  add_bias(out.probs, params.head.bias);
  softmax_rows(out.probs);
  return out;
}

ForwardResult forward(const StudentParams& params, const CsrMatrix& x) {
  std::mt19937_64 unused(0);
  return forward(params, x, false, 0.0, unused);
}

void momentum_update(StudentParams& params, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw Error("momentum must lie in [0, 1]");
  const auto& k = kernels::active();
  auto target = encoder_tensors(params.momentum_encoder);
  auto source = encoder_tensors(params.encoder);
  for (std::size_t t = 0; t < target.size(); ++t)
    k.axpby(1.0 - m, source[t].data(), m, target[t].data(), target[t].size());
}

std::vector<int> predict(const StudentParams& params, const DatasetBundle& bundle) {
  require_shape(bundle.num_classes == params.num_classes(), "class count vs head width");
  return argmax_rows(forward(params, bundle.features).probs);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const NodeId> nodes) {
  if (nodes.empty()) return 0.0;
  std::size_t correct = 0;
  for (NodeId v : nodes) correct += predictions[v] == labels[v] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

}  // namespace agst
