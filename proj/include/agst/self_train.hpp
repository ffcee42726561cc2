#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "agst/dataset.hpp"
#include "agst/student.hpp"
#include "agst/teacher.hpp"
#include "agst/topo_augment.hpp"

namespace agst {

struct AgstConfig {
  LpConfig lp;
  TrainConfig train;
  AugmentConfig augment;
  std::size_t iterations = 3;
  std::uint64_t seed = 0;
  /// Continue from the previous iteration's student instead of re-initializing.
  bool warm_start = false;
  /// Return the iteration with the best validation accuracy instead of the last one.
  bool select_best_iteration = false;

  void validate() const;
};

struct IterationResult {
  double teacher_val_acc = 0.0;
  double teacher_test_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::size_t edges_in = 0;  // edges of the graph the teacher propagated over
  std::size_t edges_added = 0;
  std::size_t edges_removed = 0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> trace;
};

struct RunResult {
  StudentParams final_params;
  std::vector<IterationResult> per_iteration;
  std::vector<int> predictions;
  std::size_t selected_iteration = 0;  // 0-based
  double test_accuracy = 0.0;
};

/// Optional observer, called after each iteration with the augmented graph
/// that feeds the next iteration.
using IterationHook = std::function<void(std::size_t iteration, const AugmentResult&)>;

/// Teacher -> student -> topology augmentation, repeated cfg.iterations times.
/// Each iteration augments the ORIGINAL graph of `bundle`.
RunResult run_agst(const DatasetBundle& bundle, const SplitSpec& split, const AgstConfig& cfg,
                   const IterationHook& hook = {});

/// Seed used to initialize the student of a given (0-based) iteration.
std::uint64_t student_seed(std::uint64_t run_seed, std::size_t iteration);

}  // namespace agst
