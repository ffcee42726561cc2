#pragma once

// Student model: a two-layer MLP encoder, a softmax prediction head, and a
// momentum copy of the encoder used for class prototypes. Gradients are
// derived by hand; grad_check() compares them with central differences.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "agst/dataset.hpp"
#include "agst/matrix.hpp"
#include "agst/teacher.hpp"

namespace agst {

/// Affine map x -> x W + b with W stored in x out.
struct Linear {
  DenseMatrix weight;
  std::vector<double> bias;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
  friend bool operator==(const Linear&, const Linear&) = default;
};

/// f -> hidden -> hidden with a ReLU in between.
struct Encoder {
  Linear hidden;
  Linear output;
  friend bool operator==(const Encoder&, const Encoder&) = default;
};

struct StudentParams {
  Encoder encoder;
  Linear head;
  Encoder momentum_encoder;

  /// PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init; the momentum
  /// encoder starts as an exact copy of the encoder.
  static StudentParams initialize(std::size_t features, std::size_t hidden, std::size_t classes,
                                  std::uint64_t seed);
  static StudentParams zeros(std::size_t features, std::size_t hidden, std::size_t classes);

  std::size_t input_dim() const { return encoder.hidden.in_dim(); }
  std::size_t hidden_dim() const { return encoder.hidden.out_dim(); }
  std::size_t num_classes() const { return head.out_dim(); }

  bool all_finite() const;
  friend bool operator==(const StudentParams&, const StudentParams&) = default;
};

/// Trainable tensors (encoder then head), in a fixed order.
std::vector<std::span<double>> trainable_tensors(Encoder& encoder, Linear& head);
std::vector<std::span<double>> encoder_tensors(Encoder& encoder);

enum class Reduction { Mean, Sum };

struct TrainConfig {
  double tau = 0.5;
  double momentum = 0.999;
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::size_t hidden = 64;
  std::size_t patience = 100;
  std::size_t max_epochs = 1000;
  /// Epoch budget when the split has no validation nodes.
  std::size_t fixed_epochs = 300;
  Reduction reduction = Reduction::Mean;
  std::uint64_t seed = 0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Forward pass

struct ForwardResult {
  DenseMatrix z;      // n x hidden encoder output
  DenseMatrix probs;  // n x c softmax
};

/// Encoder output only. Dropout is applied to the hidden layer when `dropout_rng` is set.
DenseMatrix encode(const Encoder& encoder, const CsrMatrix& x, double dropout = 0.0,
                   std::mt19937_64* dropout_rng = nullptr);

/// Inference-mode forward pass (no dropout).
ForwardResult forward(const StudentParams& params, const CsrMatrix& x);
/// Forward pass with dropout on the hidden layer when `training` is true.
ForwardResult forward(const StudentParams& params, const CsrMatrix& x, bool training, double dropout,
                      std::mt19937_64& rng);

void softmax_rows(DenseMatrix& logits);

// ---------------------------------------------------------------------------
// Losses. Gradients are dense n x (c or hidden) with zero rows outside the node set.

struct LossGrad {
  double value = 0.0;
  DenseMatrix grad;
};

/// Cross-entropy against gold labels; gradient is w.r.t. the head logits.
LossGrad loss_ce_labeled(const DenseMatrix& probs, std::span<const int> labels, std::span<const NodeId> nodes,
                         Reduction reduction = Reduction::Mean);
/// Cross-entropy against normalized soft targets; gradient is w.r.t. the head logits.
LossGrad loss_ce_unlabeled(const DenseMatrix& probs, const SoftLabels& soft, std::span<const NodeId> nodes,
                           Reduction reduction = Reduction::Mean);

/// One row per class: mean momentum-encoder embedding of the class's labeled nodes.
struct Prototypes {
  DenseMatrix matrix;
  std::size_t num_classes() const { return matrix.rows(); }
};

Prototypes compute_prototypes(const DenseMatrix& z_momentum, std::span<const int> labels,
                              std::span<const NodeId> labeled, std::size_t num_classes);

/// softmax_j(z . c_j / tau)
std::vector<double> similarity_distribution(std::span<const double> z, const Prototypes& protos, double tau);

struct PseudoLabelSet {
  std::vector<int> hard;     // argmax of the teacher row, for every node
  SoftLabels soft;           // normalized teacher rows
  std::vector<NodeId> kept;  // unlabeled nodes passing the similarity filter, sorted
};

/// Keeps unlabeled node i iff its similarity to the prototype of its hard
/// pseudo-label strictly exceeds 1/c. Requires c >= 2.
PseudoLabelSet filter_pseudo_labels(const SoftLabels& soft, const DenseMatrix& z_momentum, const Prototypes& protos,
                                    double tau, std::span<const NodeId> unlabeled);

/// Prototype contrastive loss over the kept set; gradient is w.r.t. the encoder output Z.
LossGrad loss_contrastive(const DenseMatrix& z, const Prototypes& protos, const PseudoLabelSet& pls, double tau,
                          Reduction reduction = Reduction::Mean);

/// theta' <- m theta' + (1 - m) theta
void momentum_update(StudentParams& params, double m);

// ---------------------------------------------------------------------------
// Joint objective and training

struct Gradients {
  Encoder encoder;
  Linear head;
};

struct LossParts {
  double labeled = 0.0;
  double unlabeled = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

/// Fixed inputs of one evaluation of L = L_L + lambda1 L_U + lambda2 L_CL.
/// Prototypes and the kept set are constants here.
struct JointLossInputs {
  const CsrMatrix& features;
  std::span<const int> labels;
  std::span<const NodeId> labeled;
  std::span<const NodeId> unlabeled;
  const SoftLabels& soft;
  const Prototypes* prototypes = nullptr;
  const PseudoLabelSet* pseudo = nullptr;
};

/// Evaluates the joint loss and, when `grads` is non-null, its gradient w.r.t.
/// the encoder and head. Dropout is active only when `dropout_rng` is set.
LossParts joint_loss(const StudentParams& params, const JointLossInputs& in, const TrainConfig& cfg,
                     Gradients* grads, std::mt19937_64* dropout_rng = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_labeled = 0.0;
  double loss_unlabeled = 0.0;
  double loss_contrastive = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
  std::size_t kept = 0;
};

struct TrainResult {
  StudentParams params;
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

/// Full-batch Adam on the joint loss. Early stops on validation accuracy
/// (validation loss breaks ties) and restores the best epoch; without a
/// validation set it runs `fixed_epochs` and keeps the last epoch.
TrainResult train_student(const DatasetBundle& bundle, const SplitSpec& split, const SoftLabels& soft,
                          const TrainConfig& cfg, const StudentParams* warm_start = nullptr);

/// CSV with header epoch,loss_labeled,loss_unlabeled,loss_contrastive,val_acc
void write_trace_csv(const std::vector<EpochRecord>& trace, const std::filesystem::path& path);

/// Hard predictions: argmax of the inference-mode softmax.
std::vector<int> predict(const StudentParams& params, const DatasetBundle& bundle);

double accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const NodeId> nodes);

// ---------------------------------------------------------------------------
// Gradient verification

struct GradCheckProblem {
  CsrMatrix features;
  std::vector<int> labels;
  std::vector<NodeId> labeled;
  std::vector<NodeId> unlabeled;
  SoftLabels soft;  // normalized
  std::size_t num_classes = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  std::size_t parameters = 0;
};

/// Compares the analytic gradient of the joint loss (dropout off, prototypes
/// and kept set frozen from the momentum encoder) against central differences
/// with step `epsilon`. Relative error is |a-b| / max(1e-8, |a|+|b|).
GradCheckReport grad_check(const StudentParams& params, const GradCheckProblem& problem, const TrainConfig& cfg,
                           double epsilon);

/// Random tiny problem (n <= 10, f <= 5) for grad_check.
GradCheckProblem random_grad_check_problem(std::size_t n, std::size_t f, std::size_t c, std::uint64_t seed);

}  // namespace agst
