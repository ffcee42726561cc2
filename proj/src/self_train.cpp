#include "agst/self_train.hpp"

#include <spdlog/spdlog.h>

namespace agst {

void AgstConfig::validate() const {
  lp.validate();
  train.validate();
  augment.validate();
  if (iterations < 1) throw Error("self-training needs at least one iteration");
}

std::uint64_t student_seed(std::uint64_t run_seed, std::size_t iteration) {
  // splitmix64 finalizer over (seed, iteration)
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (iteration + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RunResult run_agst(const DatasetBundle& bundle, const SplitSpec& split, const AgstConfig& cfg,
                   const IterationHook& hook) {
  cfg.validate();
  RunResult result;
  SparseGraph current = bundle.graph;
  double best_val = -1.0;
  StudentParams last;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    IterationResult rec;
    try {
      rec.edges_in = current.num_edges();
      const NormalizedOperator op = normalize_adjacency(current);
      const SoftLabels raw = propagate_labels(op, bundle, split, cfg.lp);
      const SoftLabels soft = to_distribution(raw);
      const std::vector<int> teacher_pred = argmax_rows(raw.matrix);
      rec.teacher_val_acc = accuracy(teacher_pred, bundle.labels, split.validation);
      rec.teacher_test_acc = accuracy(teacher_pred, bundle.labels, split.test);

      TrainConfig tc = cfg.train;
      tc.seed = student_seed(cfg.seed, it);
      const StudentParams* warm = cfg.warm_start && it > 0 ? &last : nullptr;
      TrainResult trained = train_student(bundle, split, soft, tc, warm);

      const ForwardResult fwd = forward(trained.params, bundle.features);
      const std::vector<int> pred = argmax_rows(fwd.probs);
      rec.val_acc = accuracy(pred, bundle.labels, split.validation);
      rec.test_acc = accuracy(pred, bundle.labels, split.test);
      rec.best_epoch = trained.best_epoch;
      rec.trace = std::move(trained.trace);

      AugmentResult aug = augment_topology(bundle.graph, fwd.probs, cfg.augment);
      rec.edges_added = aug.added.size();
      rec.edges_removed = aug.removed.size();
      if (hook) hook(it, aug);
      current = std::move(aug.graph);

      spdlog::debug("iteration {}: teacher test {:.4f}, student val {:.4f} test {:.4f}, +{} -{} edges", it + 1,
                    rec.teacher_test_acc, rec.val_acc, rec.test_acc, rec.edges_added, rec.edges_removed);

      const bool take = !cfg.select_best_iteration || split.validation.empty() || rec.val_acc > best_val;
      if (take) {
        best_val = rec.val_acc;
        result.selected_iteration = it;
        result.predictions = pred;
        result.test_accuracy = rec.test_acc;
        result.final_params = trained.params;
      }
      if (cfg.warm_start) last = std::move(trained.params);
    } catch (const Error& e) {
      throw Error("self-training iteration " + std::to_string(it + 1) + ": " + e.what());
    }
    result.per_iteration.push_back(std::move(rec));
  }
  return result;
}

}  // namespace agst
