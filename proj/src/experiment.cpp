#include "agst/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "agst/kernels.hpp"
#include "agst/synthetic.hpp"

namespace agst {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string quoted(std::string_view key) { return "'" + std::string(key) + "'"; }

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw UsageError("invalid number for " + quoted(key) + ": '" + std::string(value) + "'");
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty())
    throw UsageError("invalid non-negative integer for " + quoted(key) + ": '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError("invalid boolean for " + quoted(key) + ": '" + std::string(value) + "'");
}

struct Setting {
  std::string_view key;
  void (*apply)(ExperimentSpec&, std::string_view key, std::string_view value);
};

// clang-format off
const Setting kSettings[] = {
    {"dataset", [](ExperimentSpec& s, std::string_view, std::string_view v) { s.dataset = std::string(v); }},
    {"protocol", [](ExperimentSpec& s, std::string_view, std::string_view v) { s.protocol = parse_protocol(v); }},
    {"k", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.k = parse_uint(k, v); s.k_set = true; }},
    {"rate", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.rate = parse_double(k, v); s.rate_set = true; }},
    {"val-per-class", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.val_per_class = parse_uint(k, v); }},
    {"test-size", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.test_size = parse_uint(k, v); }},
    {"runs", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.runs = parse_uint(k, v); }},
    {"method", [](ExperimentSpec& s, std::string_view, std::string_view v) { s.method = parse_method(v); }},
    {"seed", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.seed = parse_uint(k, v); }},
    {"threads", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.threads = parse_uint(k, v); }},
    {"normalize-features", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.normalize_features = parse_bool(k, v); }},
    {"out", [](ExperimentSpec& s, std::string_view, std::string_view v) { s.output = std::string(v); }},
    {"alpha", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.lp.alpha = parse_double(k, v); }},
    {"steps", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.lp.steps = parse_uint(k, v); }},
    {"tau", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.tau = parse_double(k, v); }},
    {"momentum", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.momentum = parse_double(k, v); }},
    {"lambda1", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.lambda1 = parse_double(k, v); }},
    {"lambda2", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.lambda2 = parse_double(k, v); }},
    {"lr", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.learning_rate = parse_double(k, v); }},
    {"weight-decay", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.weight_decay = parse_double(k, v); }},
    {"dropout", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.dropout = parse_double(k, v); }},
    {"hidden", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.hidden = parse_uint(k, v); }},
    {"patience", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.patience = parse_uint(k, v); }},
    {"max-epochs", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.max_epochs = parse_uint(k, v); }},
    {"fixed-epochs", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.train.fixed_epochs = parse_uint(k, v); }},
    {"reduction", [](ExperimentSpec& s, std::string_view k, std::string_view v) {
       if (v == "mean") s.cfg.train.reduction = Reduction::Mean;
       else if (v == "sum") s.cfg.train.reduction = Reduction::Sum;
       else throw UsageError("invalid value for " + quoted(k) + ": expected mean or sum");
     }},
    {"beta-a", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.augment.beta_add = parse_double(k, v); }},
    {"beta-r", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.augment.beta_remove = parse_double(k, v); }},
    {"iterations", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.iterations = parse_uint(k, v); }},
    {"warm-start", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.warm_start = parse_bool(k, v); }},
    {"select-best", [](ExperimentSpec& s, std::string_view k, std::string_view v) { s.cfg.select_best_iteration = parse_bool(k, v); }},
};
// clang-format on

nlohmann::json iteration_to_json(const IterationResult& it) {
  return {{"teacher_val_acc", it.teacher_val_acc},
          {"teacher_test_acc", it.teacher_test_acc},
          {"val_acc", it.val_acc},
          {"test_acc", it.test_acc},
          {"edges_in", it.edges_in},
          {"edges_added", it.edges_added},
          {"edges_removed", it.edges_removed},
          {"best_epoch", it.best_epoch},
          {"epochs", it.trace.size()}};
}

}  // namespace

ClusterGraphOptions synthetic_preset(std::string_view name) {
  ClusterGraphOptions o;
  if (name == "two-cluster") return o;
  if (name == "citation") {
    // Sparse bag-of-words features and roughly 80% same-class edges.
    o.nodes = 1400;
    o.classes = 7;
    o.features = 500;
    o.intra_degree = 3.2;
    o.noise_edge_fraction = 0.2;
    o.feature_kind = ClusterGraphOptions::Features::SparseBinary;
    o.topic_word_prob = 0.05;
    o.background_word_prob = 0.012;
    return o;
  }
  throw UsageError("unknown built-in dataset 'synthetic:" + std::string(name) +
                   "' (known: synthetic:two-cluster, synthetic:citation)");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Agst: return "agst";
    case Method::AgstBase: return "agst-base";
    case Method::LpOnly: return "lp-only";
    case Method::MlpOnly: return "mlp-only";
    case Method::NoContrast: return "no-contrast";
    case Method::NoAugment: return "no-augment";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Agst, Method::AgstBase, Method::LpOnly, Method::MlpOnly, Method::NoContrast,
                   Method::NoAugment})
    if (method_name(m) == name) return m;
  throw UsageError("unknown method '" + std::string(name) +
                   "' (expected agst, agst-base, lp-only, mlp-only, no-contrast or no-augment)");
}

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Balanced: return "balanced";
    case Protocol::Imbalanced: return "imbalanced";
    case Protocol::Standard20: return "standard20";
  }
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  for (Protocol p : {Protocol::Balanced, Protocol::Imbalanced, Protocol::Standard20})
    if (protocol_name(p) == name) return p;
  throw UsageError("unknown protocol '" + std::string(name) + "' (expected balanced, imbalanced or standard20)");
}

SplitMode ExperimentSpec::split_mode() const {
  switch (protocol) {
    case Protocol::Balanced: return Balanced{k, val_per_class};
    case Protocol::Imbalanced: return Imbalanced{rate, test_size};
    case Protocol::Standard20: return Standard20{};
  }
  return Standard20{};
}

void ExperimentSpec::validate() const {
  if (runs < 1) throw UsageError("--runs must be at least 1");
  if (threads < 1) throw UsageError("--threads must be at least 1");
  if (protocol == Protocol::Balanced && k < 1) throw UsageError("--k must be at least 1");
  if (protocol == Protocol::Imbalanced && !(rate > 0.0 && rate < 1.0))
    throw UsageError("--rate must lie in (0, 1)");
  if (protocol == Protocol::Imbalanced && k_set) throw UsageError("--k contradicts --protocol imbalanced");
  if (protocol != Protocol::Imbalanced && rate_set)
    throw UsageError("--rate contradicts --protocol " + std::string(protocol_name(protocol)));
  if (protocol == Protocol::Standard20 && k_set && k != 20)
    throw UsageError("--k " + std::to_string(k) + " contradicts --protocol standard20");
  try {
    effective_config(method, cfg).validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value) {
  for (const Setting& s : kSettings) {
    if (s.key == key) {
      s.apply(spec, key, value);
      return;
    }
  }
  throw UsageError("unknown setting " + quoted(key));
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Setting& s : kSettings) out.emplace_back(s.key);
    return out;
  }();
  return keys;
}

AgstConfig effective_config(Method method, const AgstConfig& base) {
  AgstConfig cfg = base;
  switch (method) {
    case Method::Agst:
    case Method::LpOnly: break;
    case Method::AgstBase:
      cfg.train.lambda2 = 0.0;
      cfg.augment = {0.0, 0.0};
      break;
    case Method::NoContrast: cfg.train.lambda2 = 0.0; break;
    case Method::NoAugment: cfg.augment = {0.0, 0.0}; break;
    case Method::MlpOnly:
      cfg.train.lambda1 = 0.0;
      cfg.train.lambda2 = 0.0;
      cfg.augment = {0.0, 0.0};
      cfg.iterations = 1;
      break;
  }
  return cfg;
}

std::pair<double, double> mean_ci95(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean_ci95: no values");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

DatasetBundle load_experiment_dataset(const std::string& dataset, bool normalize_features) {
  if (dataset.empty()) throw UsageError("--dataset is required");
  constexpr std::string_view kSynth = "synthetic:";
  if (dataset.rfind(kSynth, 0) == 0) {
    DatasetBundle b = make_cluster_graph(synthetic_preset(std::string_view(dataset).substr(kSynth.size())));
    if (normalize_features) l2_normalize_rows(b.features);
    return b;
  }
  namespace fs = std::filesystem;
  std::vector<fs::path> candidates{fs::path(dataset)};
  if (dataset.find('/') == std::string::npos) {
    if (const char* dir = std::getenv("AGST_DATA_DIR"); dir && *dir) candidates.push_back(fs::path(dir) / dataset);
    candidates.push_back(fs::path("data") / dataset);
  }
  for (const auto& c : candidates) {
    if (fs::is_directory(c)) return load_dataset(c, DatasetFormat::Directory, {normalize_features});
  }
  std::string looked;
  for (const auto& c : candidates) looked += (looked.empty() ? "" : ", ") + c.string();
  throw Error("dataset '" + dataset + "' not found (looked in " + looked + ")");
}

RunRecord run_single(const DatasetBundle& bundle, const ExperimentSpec& spec, std::size_t index) {
  const auto start = Clock::now();
  RunRecord rec;
  rec.index = index;
  rec.seed = spec.seed + index;
  const SplitSpec split = make_split(bundle, spec.split_mode(), rec.seed);
  rec.split_seed = split.seed;

  AgstConfig cfg = effective_config(spec.method, spec.cfg);
  cfg.seed = rec.seed;

  if (spec.method == Method::LpOnly) {
    const NormalizedOperator op = normalize_adjacency(bundle.graph);
    const std::vector<int> pred = argmax_rows(propagate_labels(op, bundle, split, cfg.lp).matrix);
    IterationResult it;
    it.teacher_val_acc = accuracy(pred, bundle.labels, split.validation);
    it.teacher_test_acc = accuracy(pred, bundle.labels, split.test);
    it.val_acc = it.teacher_val_acc;
    it.test_acc = it.teacher_test_acc;
    it.edges_in = bundle.graph.num_edges();
    rec.accuracy = it.test_acc;
    rec.iterations.push_back(std::move(it));
  } else {
    RunResult r = run_agst(bundle, split, cfg);
    rec.accuracy = r.test_accuracy;
    rec.selected_iteration = r.selected_iteration;
    rec.iterations = std::move(r.per_iteration);
  }
  rec.wall_ms = elapsed_ms(start);
  return rec;
}

Report run_experiment(const DatasetBundle& bundle, const ExperimentSpec& spec) {
  spec.validate();
  const auto start = Clock::now();
  std::vector<std::optional<RunRecord>> slots(spec.runs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_index = spec.runs;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t r = next.fetch_add(1);
      if (r >= spec.runs) return;
      try {
        slots[r] = run_single(bundle, spec, r);
        spdlog::info("run {}/{} seed {}: accuracy {:.4f}", r + 1, spec.runs, spec.seed + r, slots[r]->accuracy);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (r < error_index) {
          error_index = r;
          error = std::make_exception_ptr(
              Error("run " + std::to_string(r + 1) + " (seed " + std::to_string(spec.seed + r) + ") failed: " + e.what()));
        }
        failed.store(true);
      }
    }
  };

  const std::size_t pool = std::min(spec.threads, spec.runs);
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  Report report;
  report.runs.reserve(spec.runs);
  std::vector<double> acc;
  for (auto& slot : slots) {
    acc.push_back(slot->accuracy);
    report.runs.push_back(std::move(*slot));
  }
  std::tie(report.mean, report.ci95) = mean_ci95(acc);
  report.wall_ms = elapsed_ms(start);
  report.config = config_to_json(spec);
  return report;
}

Report run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  return run_experiment(load_experiment_dataset(spec.dataset, spec.normalize_features), spec);
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Lambda1: return "lambda1";
    case SweepAxis::Lambda2: return "lambda2";
    case SweepAxis::BetaAdd: return "beta-a";
    case SweepAxis::BetaRemove: return "beta-r";
    case SweepAxis::Steps: return "steps";
    case SweepAxis::K: return "k";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::Lambda1, SweepAxis::Lambda2, SweepAxis::BetaAdd, SweepAxis::BetaRemove,
                      SweepAxis::Steps, SweepAxis::K})
    if (axis_name(a) == name) return a;
  throw UsageError("unknown sweep axis '" + std::string(name) +
                   "' (expected lambda1, lambda2, beta-a, beta-r, steps or k)");
}

std::vector<SweepRow> run_sweep(const DatasetBundle& bundle, const ExperimentSpec& spec, SweepAxis axis,
                                const std::vector<double>& values) {
  if (values.empty()) throw UsageError("sweep needs at least one axis value");
  auto as_count = [&](double v) {
    if (v < 1.0 || v != std::floor(v))
      throw UsageError("sweep axis " + std::string(axis_name(axis)) + " needs positive integers, got " +
                       fmt::format("{}", v));
    return static_cast<std::size_t>(v);
  };
  std::vector<SweepRow> rows;
  for (double v : values) {
    ExperimentSpec s = spec;
    switch (axis) {
      case SweepAxis::Lambda1: s.cfg.train.lambda1 = v; break;
      case SweepAxis::Lambda2: s.cfg.train.lambda2 = v; break;
      case SweepAxis::BetaAdd: s.cfg.augment.beta_add = v; break;
      case SweepAxis::BetaRemove: s.cfg.augment.beta_remove = v; break;
      case SweepAxis::Steps: s.cfg.lp.steps = as_count(v); break;
      case SweepAxis::K:
        if (s.protocol != Protocol::Balanced) throw UsageError("sweep over k needs --protocol balanced");
        s.k = as_count(v);
        break;
    }
    spdlog::info("sweep {} = {}", axis_name(axis), v);
    rows.push_back({axis, v, run_experiment(bundle, s)});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "axis,value,mean,ci95\n";
  for (const auto& r : rows) out << fmt::format("{},{},{},{}\n", axis_name(r.axis), r.value, r.report.mean, r.report.ci95);
  if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json config_to_json(const ExperimentSpec& spec) {
  const AgstConfig cfg = effective_config(spec.method, spec.cfg);
  nlohmann::json protocol = {{"name", protocol_name(spec.protocol)}};
  switch (spec.protocol) {
    case Protocol::Balanced:
      protocol["k"] = spec.k;
      protocol["val_per_class"] = spec.val_per_class;
      break;
    case Protocol::Imbalanced:
      protocol["rate"] = spec.rate;
      protocol["test_size"] = spec.test_size;
      break;
    case Protocol::Standard20: break;
  }
  return {{"dataset", spec.dataset},
          {"protocol", protocol},
          {"method", method_name(spec.method)},
          {"runs", spec.runs},
          {"seed", spec.seed},
          {"threads", spec.threads},
          {"normalize_features", spec.normalize_features},
          {"isa", kernels::active().name},
          {"alpha", cfg.lp.alpha},
          {"steps", cfg.lp.steps},
          {"tau", cfg.train.tau},
          {"momentum", cfg.train.momentum},
          {"lambda1", cfg.train.lambda1},
          {"lambda2", cfg.train.lambda2},
          {"lr", cfg.train.learning_rate},
          {"weight_decay", cfg.train.weight_decay},
          {"dropout", cfg.train.dropout},
          {"hidden", cfg.train.hidden},
          {"patience", cfg.train.patience},
          {"max_epochs", cfg.train.max_epochs},
          {"fixed_epochs", cfg.train.fixed_epochs},
          {"reduction", cfg.train.reduction == Reduction::Mean ? "mean" : "sum"},
          {"beta_a", cfg.augment.beta_add},
          {"beta_r", cfg.augment.beta_remove},
          {"iterations", cfg.iterations},
          {"warm_start", cfg.warm_start},
          {"select_best", cfg.select_best_iteration}};
}

nlohmann::json report_to_json(const Report& report) {
  nlohmann::json runs = nlohmann::json::array();
  double min_ms = 0.0, max_ms = 0.0, sum_ms = 0.0;
  for (const auto& r : report.runs) {
    nlohmann::json its = nlohmann::json::array();
    for (const auto& it : r.iterations) its.push_back(iteration_to_json(it));
    runs.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"split_seed", r.split_seed},
                    {"accuracy", r.accuracy},
                    {"selected_iteration", r.selected_iteration},
                    {"wall_ms", r.wall_ms},
                    {"iterations", std::move(its)}});
    min_ms = runs.size() == 1 ? r.wall_ms : std::min(min_ms, r.wall_ms);
    max_ms = std::max(max_ms, r.wall_ms);
    sum_ms += r.wall_ms;
  }
  const double n = std::max<double>(1.0, static_cast<double>(report.runs.size()));
  return {{"config", report.config},
          {"runs", std::move(runs)},
          {"mean", report.mean},
          {"ci95", report.ci95},
          {"wall_ms", report.wall_ms},
          {"run_wall_ms", {{"mean", sum_ms / n}, {"min", min_ms}, {"max", max_ms}}}};
}

std::string summarize(const Report& report, std::string_view label) {
  return fmt::format("{}: accuracy {:.2f} +/- {:.2f} % (95% CI, {} runs), {:.1f} s", label, 100.0 * report.mean,
                     100.0 * report.ci95, report.runs.size(), report.wall_ms / 1000.0);
}

}  // namespace agst
