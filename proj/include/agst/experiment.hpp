#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agst/dataset.hpp"
#include "agst/self_train.hpp"
#include "agst/synthetic.hpp"

namespace agst {

/// Bad command-line or config-file input (maps to exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Method { Agst, AgstBase, LpOnly, MlpOnly, NoContrast, NoAugment };
enum class Protocol { Balanced, Imbalanced, Standard20 };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);

struct ExperimentSpec {
  std::string dataset;
  Protocol protocol = Protocol::Balanced;
  std::size_t k = 5;
  double rate = 0.01;
  std::size_t val_per_class = 30;
  std::size_t test_size = 1000;
  std::size_t runs = 20;
  Method method = Method::Agst;
  AgstConfig cfg;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool normalize_features = false;
  std::filesystem::path output = "report.json";

  // Which protocol parameters were set explicitly; used to reject contradictions.
  bool k_set = false;
  bool rate_set = false;

  SplitMode split_mode() const;
  void validate() const;
};

/// Applies one `key = value` setting (config file keys equal long flag names).
void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value);
/// Keys accepted by apply_setting.
const std::vector<std::string>& setting_keys();

/// Config with the method's ablation overrides applied.
AgstConfig effective_config(Method method, const AgstConfig& base);

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  double accuracy = 0.0;
  double wall_ms = 0.0;
  std::size_t selected_iteration = 0;
  std::vector<IterationResult> iterations;
};

struct Report {
  std::vector<RunRecord> runs;  // ordered by run index
  double mean = 0.0;
  double ci95 = 0.0;
  double wall_ms = 0.0;
  nlohmann::json config;
};

/// Mean and 1.96 * sample-stddev / sqrt(runs); half-width is 0 for one run.
std::pair<double, double> mean_ci95(const std::vector<double>& values);

/// Generator options behind `synthetic:<name>` (two-cluster, citation).
ClusterGraphOptions synthetic_preset(std::string_view name);

/// Resolves `cora` style names via $AGST_DATA_DIR and ./data, and the
/// built-in `synthetic:two-cluster` / `synthetic:citation` generators.
DatasetBundle load_experiment_dataset(const std::string& dataset, bool normalize_features);

/// Runs spec.runs repetitions with seeds spec.seed + r.
Report run_experiment(const DatasetBundle& bundle, const ExperimentSpec& spec);
Report run_experiment(const ExperimentSpec& spec);

/// Single repetition; exposed so a recorded run can be replayed.
RunRecord run_single(const DatasetBundle& bundle, const ExperimentSpec& spec, std::size_t index);

enum class SweepAxis { Lambda1, Lambda2, BetaAdd, BetaRemove, Steps, K };
std::string_view axis_name(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

struct SweepRow {
  SweepAxis axis;
  double value;
  Report report;
};

std::vector<SweepRow> run_sweep(const DatasetBundle& bundle, const ExperimentSpec& spec, SweepAxis axis,
                                const std::vector<double>& values);
/// Header `axis,value,mean,ci95`.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

nlohmann::json config_to_json(const ExperimentSpec& spec);
nlohmann::json report_to_json(const Report& report);
std::string summarize(const Report& report, std::string_view label);

}  // namespace agst
