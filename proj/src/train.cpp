#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "agst/kernels.hpp"
#include "agst/student.hpp"

namespace agst {
namespace {

Linear zeros_like(const Linear& l) { return {DenseMatrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size(), 0.0)}; }

void column_sums(const DenseMatrix& m, std::vector<double>& out) {
  const auto& k = kernels::active();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) k.axpy(1.0, m.row(i).data(), out.data(), m.cols());
}

void add_bias(DenseMatrix& m, const std::vector<double>& bias) {
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m.rows(); ++i) k.axpy(1.0, bias.data(), m.row(i).data(), m.cols());
}

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t t = 0;

  explicit AdamState(const std::vector<std::span<double>>& tensors) {
    for (const auto& s : tensors) {
      m.emplace_back(s.size(), 0.0);
      v.emplace_back(s.size(), 0.0);
    }
  }

  void step(std::vector<std::span<double>> params, std::vector<std::span<double>> grads, const TrainConfig& cfg) {
    ++t;
    constexpr double b1 = 0.9, b2 = 0.999;
    const kernels::AdamStep s{cfg.learning_rate,
                              b1,
                              b2,
                              1e-8,
                              cfg.weight_decay,
                              1.0 - std::pow(b1, static_cast<double>(t)),
                              1.0 - std::pow(b2, static_cast<double>(t))};
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < params.size(); ++i)
      k.adam(params[i].data(), grads[i].data(), m[i].data(), v[i].data(), params[i].size(), s);
  }
};

double validation_loss(const DenseMatrix& probs, std::span<const int> labels, std::span<const NodeId> nodes) {
  if (nodes.empty()) return 0.0;
  double loss = 0.0;
  for (NodeId v : nodes) loss -= std::log(std::max(probs(v, static_cast<std::size_t>(labels[v])), 1e-12));
  return loss / static_cast<double>(nodes.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(tau > 0.0)) throw Error("tau must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw Error("momentum must lie in [0, 1]");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw Error("loss weights must be non-negative");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw Error("weight decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
  if (hidden < 1) throw Error("hidden width must be >= 1");
  if (max_epochs < 1 || fixed_epochs < 1) throw Error("epoch budgets must be >= 1");
}

LossParts joint_loss(const StudentParams& params, const JointLossInputs& in, const TrainConfig& cfg,
                     Gradients* grads, std::mt19937_64* dropout_rng) {
  const Encoder& enc = params.encoder;
  const CsrMatrix& x = in.features;
  require_shape(x.cols == enc.hidden.in_dim(), "feature columns vs encoder input");

  // Forward, keeping the intermediates needed by the backward pass.
  DenseMatrix pre = matmul(x, enc.hidden.weight);
  add_bias(pre, enc.hidden.bias);
  DenseMatrix hid = pre;
  std::vector<double> mask;
  for (double& v : hid.values()) v = std::max(v, 0.0);
  const bool use_dropout = dropout_rng != nullptr && cfg.dropout > 0.0;
  if (use_dropout) {
    std::bernoulli_distribution keep(1.0 - cfg.dropout);
    const double scale = 1.0 / (1.0 - cfg.dropout);
    mask.resize(hid.size());
    for (std::size_t i = 0; i < hid.size(); ++i) {
      mask[i] = keep(*dropout_rng) ? scale : 0.0;
      hid.data()[i] *= mask[i];
    }
  }
  DenseMatrix z = matmul(hid, enc.output.weight);
  add_bias(z, enc.output.bias);
  DenseMatrix probs = matmul(z, params.head.weight);
  add_bias(probs, params.head.bias);
  softmax_rows(probs);

  LossParts parts;
  LossGrad ll = loss_ce_labeled(probs, in.labels, in.labeled, cfg.reduction);
  parts.labeled = ll.value;
  DenseMatrix dlogits = std::move(ll.grad);
  const auto& k = kernels::active();
  if (cfg.lambda1 > 0.0 && !in.unlabeled.empty()) {
    LossGrad lu = loss_ce_unlabeled(probs, in.soft, in.unlabeled, cfg.reduction);
    parts.unlabeled = lu.value;
    k.axpy(cfg.lambda1, lu.grad.data(), dlogits.data(), dlogits.size());
  }
  DenseMatrix dz_cl;
  if (cfg.lambda2 > 0.0 && in.prototypes != nullptr && in.pseudo != nullptr) {
    LossGrad lc = loss_contrastive(z, *in.prototypes, *in.pseudo, cfg.tau, cfg.reduction);
    parts.contrastive = lc.value;
    dz_cl = std::move(lc.grad);
  }
  parts.total = parts.labeled + cfg.lambda1 * parts.unlabeled + cfg.lambda2 * parts.contrastive;
  if (grads == nullptr) return parts;

  // Backward.
  grads->head.weight = matmul_tn(z, dlogits);
  grads->head.bias.resize(dlogits.cols());
  column_sums(dlogits, grads->head.bias);

  DenseMatrix dz = matmul_nt(dlogits, params.head.weight);
  if (!dz_cl.empty()) k.axpy(cfg.lambda2, dz_cl.data(), dz.data(), dz.size());

  grads->encoder.output.weight = matmul_tn(hid, dz);
  grads->encoder.output.bias.resize(dz.cols());
  column_sums(dz, grads->encoder.output.bias);

  DenseMatrix dpre = matmul_nt(dz, enc.output.weight);
  for (std::size_t i = 0; i < dpre.size(); ++i) {
    double g = pre.data()[i] > 0.0 ? dpre.data()[i] : 0.0;
    if (use_dropout) g *= mask[i];
    dpre.data()[i] = g;
  }
  grads->encoder.hidden.weight = matmul_tn(x, dpre);
  grads->encoder.hidden.bias.resize(dpre.cols());
  column_sums(dpre, grads->encoder.hidden.bias);
  return parts;
}

TrainResult train_student(const DatasetBundle& bundle, const SplitSpec& split, const SoftLabels& soft,
                          const TrainConfig& cfg, const StudentParams* warm_start) {
  cfg.validate();
  if (split.labeled.empty()) throw Error("training needs a non-empty labeled set");
  if (!soft.normalized) throw Error("student targets must be normalized soft labels");
  const std::size_t c = bundle.num_classes;
  const std::vector<NodeId> unlabeled = unlabeled_nodes(bundle.num_nodes(), split);

  TrainResult result;
  StudentParams params = warm_start != nullptr
                             ? *warm_start
                             : StudentParams::initialize(bundle.num_features(), cfg.hidden, c, cfg.seed);
  require_shape(params.input_dim() == bundle.num_features() && params.num_classes() == c,
                "student parameters vs dataset");
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  Gradients grads{{zeros_like(params.encoder.hidden), zeros_like(params.encoder.output)}, zeros_like(params.head)};
  AdamState adam(trainable_tensors(params.encoder, params.head));

  const bool contrastive = cfg.lambda2 > 0.0 && c >= 2;
  Prototypes protos;
  PseudoLabelSet pseudo;
  const auto refresh_pseudo = [&] {
    if (!contrastive) return;
    const DenseMatrix zm = encode(params.momentum_encoder, bundle.features);
    protos = compute_prototypes(zm, bundle.labels, split.labeled, c);
    pseudo = filter_pseudo_labels(soft, zm, protos, cfg.tau, unlabeled);
  };
  refresh_pseudo();

  const bool has_validation = !split.validation.empty();
  const std::size_t budget = has_validation ? cfg.max_epochs : cfg.fixed_epochs;
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_seen_loss = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;
  StudentParams best = params;

  for (std::size_t epoch = 1; epoch <= budget; ++epoch) {
    const JointLossInputs in{bundle.features, bundle.labels, split.labeled, unlabeled, soft,
                             contrastive ? &protos : nullptr, contrastive ? &pseudo : nullptr};
    const LossParts parts = joint_loss(params, in, cfg, &grads, &dropout_rng);
    if (!std::isfinite(parts.total)) throw Error("non-finite training loss at epoch " + std::to_string(epoch));
    adam.step(trainable_tensors(params.encoder, params.head), trainable_tensors(grads.encoder, grads.head), cfg);
    momentum_update(params, cfg.momentum);
    if (!params.all_finite()) throw Error("non-finite parameters after epoch " + std::to_string(epoch));
    refresh_pseudo();

    EpochRecord rec{epoch, parts.labeled, parts.unlabeled, parts.contrastive, 0.0, 0.0,
                    contrastive ? pseudo.kept.size() : 0};
    if (has_validation) {
      const DenseMatrix probs = forward(params, bundle.features).probs;
      rec.val_acc = accuracy(argmax_rows(probs), bundle.labels, split.validation);
      rec.val_loss = validation_loss(probs, bundle.labels, split.validation);
    }
    result.trace.push_back(rec);
    if (!has_validation) continue;

    const bool acc_up = rec.val_acc > best_acc;
    const bool new_best = acc_up || (rec.val_acc == best_acc && rec.val_loss < best_loss);
    if (new_best) {
      best_acc = rec.val_acc;
      best_loss = rec.val_loss;
      best = params;
      result.best_epoch = epoch;
    }
    const bool loss_down = rec.val_loss < best_seen_loss;
    best_seen_loss = std::min(best_seen_loss, rec.val_loss);
    if (acc_up || loss_down) {
      bad_epochs = 0;
    } else if (++bad_epochs > cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  if (has_validation) {
    result.params = std::move(best);
  } else {
    result.params = std::move(params);
    result.best_epoch = result.trace.size();
  }
  return result;
}

void write_trace_csv(const std::vector<EpochRecord>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,loss_labeled,loss_unlabeled,loss_contrastive,val_acc\n";
  for (const auto& r : trace)
    out << r.epoch << ',' << r.loss_labeled << ',' << r.loss_unlabeled << ',' << r.loss_contrastive << ','
        << r.val_acc << '\n';
}

GradCheckReport grad_check(const StudentParams& params, const GradCheckProblem& problem, const TrainConfig& cfg,
                           double epsilon) {
  const std::size_t c = problem.num_classes;
  Prototypes protos;
  PseudoLabelSet pseudo;
  const bool contrastive = cfg.lambda2 > 0.0 && c >= 2;
  if (contrastive) {
    const DenseMatrix zm = encode(params.momentum_encoder, problem.features);
    protos = compute_prototypes(zm, problem.labels, problem.labeled, c);
    pseudo = filter_pseudo_labels(problem.soft, zm, protos, cfg.tau, problem.unlabeled);
  }
  const JointLossInputs in{problem.features, problem.labels, problem.labeled, problem.unlabeled, problem.soft,
                           contrastive ? &protos : nullptr, contrastive ? &pseudo : nullptr};

  StudentParams work = params;
  Gradients grads;
  joint_loss(work, in, cfg, &grads);
  const auto analytic = trainable_tensors(grads.encoder, grads.head);
  auto tensors = trainable_tensors(work.encoder, work.head);

  GradCheckReport report;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t i = 0; i < tensors[t].size(); ++i) {
      double& w = tensors[t][i];
      const double saved = w;
      w = saved + epsilon;
      const double up = joint_loss(work, in, cfg, nullptr).total;
      w = saved - epsilon;
      const double down = joint_loss(work, in, cfg, nullptr).total;
      w = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[t][i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      report.max_relative_error = std::max(report.max_relative_error, rel);
      report.max_abs_analytic = std::max(report.max_abs_analytic, std::abs(a));
      report.max_abs_numeric = std::max(report.max_abs_numeric, std::abs(numeric));
      ++report.parameters;
    }
  }
  return report;
}

GradCheckProblem random_grad_check_problem(std::size_t n, std::size_t f, std::size_t c, std::uint64_t seed) {
  if (n < c + 1 || c < 2) throw Error("grad-check problem needs c >= 2 and n > c");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GradCheckProblem p;
  p.num_classes = c;
  DenseMatrix x(n, f);
  for (double& v : x.values()) v = normal(rng);
  p.features = CsrMatrix::from_dense(x);
  p.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.labels[i] = static_cast<int>(i % c);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < c) p.labeled.push_back(static_cast<NodeId>(i));
    else p.unlabeled.push_back(static_cast<NodeId>(i));
  }
  p.soft.matrix = DenseMatrix(n, c);
  for (double& v : p.soft.matrix.values()) v = unit(rng);
  p.soft = to_distribution(p.soft);
  return p;
}

}  // namespace agst
