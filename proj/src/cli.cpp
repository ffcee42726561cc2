#include "agst/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "agst/config_file.hpp"
#include "agst/experiment.hpp"
#include "agst/kernels.hpp"
#include "agst/synthetic.hpp"

namespace agst {
namespace {

namespace fs = std::filesystem;

constexpr int kUsageExit = 2;

/// Fails early on an output path that cannot be created or written.
void check_writable(const fs::path& path) {
  const bool existed = fs::exists(path);
  {
    std::ofstream probe(path, std::ios::app);
    if (!probe) throw UsageError("output path is not writable: " + path.string());
  }
  if (!existed) fs::remove(path);
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || item.empty())
      throw UsageError("invalid number in --values: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--values needs at least one number");
  return out;
}

/// Options shared by `run` and `sweep`: one flag per ExperimentSpec setting.
struct SpecOptions {
  std::string config;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "Flat key = value file; command-line flags override it");
    for (const auto& key : setting_keys()) {
      CLI::Option* opt = app.add_option("--" + key, values[key]);
      options.emplace_back(key, opt);
    }
  }

  ExperimentSpec resolve() const {
    ExperimentSpec spec;
    if (!config.empty())
      for (const auto& [k, v] : read_key_value_file(config)) apply_setting(spec, k, v);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(spec, key, values.at(key));
    spec.validate();
    return spec;
  }
};

/// Replays run 0 to export its training trace and augmentation decisions.
void export_first_run(const DatasetBundle& bundle, const ExperimentSpec& spec, const std::string& trace_csv,
                      const std::string& augment_tsv) {
  if (trace_csv.empty() && augment_tsv.empty()) return;
  if (spec.method == Method::LpOnly) {
    spdlog::warn("lp-only has no student trace or augmentation to export");
    return;
  }
  const SplitSpec split = make_split(bundle, spec.split_mode(), spec.seed);
  AgstConfig cfg = effective_config(spec.method, spec.cfg);
  cfg.seed = spec.seed;
  std::optional<AugmentResult> last;
  const RunResult r = run_agst(bundle, split, cfg, [&](std::size_t, const AugmentResult& a) { last = a; });
  if (!trace_csv.empty()) write_trace_csv(r.per_iteration.back().trace, trace_csv);
  if (!augment_tsv.empty() && last) write_augment_tsv(*last, augment_tsv);
}

int cmd_run(const SpecOptions& opts, const std::string& trace_csv, const std::string& augment_tsv) {
  const ExperimentSpec spec = opts.resolve();
  check_writable(spec.output);
  if (!trace_csv.empty()) check_writable(trace_csv);
  if (!augment_tsv.empty()) check_writable(augment_tsv);
  const DatasetBundle bundle = load_experiment_dataset(spec.dataset, spec.normalize_features);
  spdlog::info("{}: {} nodes, {} edges, {} features, {} classes", spec.dataset, bundle.graph.num_nodes(),
               bundle.graph.num_edges(), bundle.features.cols, bundle.num_classes);
  const Report report = run_experiment(bundle, spec);
  write_json(report_to_json(report), spec.output);
  export_first_run(bundle, spec, trace_csv, augment_tsv);
  std::cout << summarize(report, fmt::format("{} on {}", method_name(spec.method), spec.dataset)) << '\n'
            << "report: " << spec.output.string() << '\n';
  return 0;
}

int cmd_sweep(const SpecOptions& opts, const std::string& axis_text, const std::string& values_text,
              const std::string& csv) {
  const ExperimentSpec spec = opts.resolve();
  const SweepAxis axis = parse_axis(axis_text);
  const std::vector<double> values = parse_value_list(values_text);
  check_writable(csv);
  check_writable(spec.output);
  const DatasetBundle bundle = load_experiment_dataset(spec.dataset, spec.normalize_features);
  const std::vector<SweepRow> rows = run_sweep(bundle, spec, axis, values);
  write_sweep_csv(rows, csv);
  nlohmann::json j = {{"axis", axis_name(axis)}, {"rows", nlohmann::json::array()}};
  for (const auto& row : rows) {
    j["rows"].push_back({{"value", row.value}, {"report", report_to_json(row.report)}});
    std::cout << summarize(row.report, fmt::format("{} = {}", axis_name(axis), row.value)) << '\n';
  }
  write_json(j, spec.output);
  std::cout << "table: " << csv << "\nreport: " << spec.output.string() << '\n';
  return 0;
}

struct ConvertOptions {
  std::string from = "linqs";
  std::string content;
  std::string cites;
  std::string input;
  std::string out;
  bool normalize = false;
};

int cmd_convert(const ConvertOptions& o) {
  DatasetBundle bundle;
  if (o.from == "linqs") {
    if (o.content.empty() || o.cites.empty()) throw UsageError("convert --from linqs needs --content and --cites");
    bundle = convert_linqs(o.content, o.cites);
  } else if (o.from == "dir") {
    if (o.input.empty()) throw UsageError("convert --from dir needs --input");
    bundle = load_dataset(o.input);
  } else {
    throw UsageError("unknown --from '" + o.from + "' (expected linqs or dir)");
  }
  if (o.normalize) l2_normalize_rows(bundle.features);
  write_dataset(bundle, o.out);
  std::cout << fmt::format("wrote {}: {} nodes, {} edges, {} features, {} classes\n", o.out,
                           bundle.graph.num_nodes(), bundle.graph.num_edges(), bundle.features.cols,
                           bundle.num_classes);
  return 0;
}

struct GradCheckOptions {
  std::size_t instances = 20;
  double epsilon = 1e-5;
  double threshold = 1e-4;
  std::uint64_t seed = 0;
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double tau = 0.5;
};

int cmd_gradcheck(const GradCheckOptions& o) {
  if (o.instances < 1) throw UsageError("--instances must be at least 1");
  if (!(o.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
  TrainConfig cfg;
  cfg.dropout = 0.0;
  cfg.lambda1 = o.lambda1;
  cfg.lambda2 = o.lambda2;
  cfg.tau = o.tau;
  double worst = 0.0;
  std::size_t params = 0;
  for (std::size_t i = 0; i < o.instances; ++i) {
    const std::size_t n = 6 + i % 5, f = 3 + i % 3, c = 2 + i % 3;
    const GradCheckProblem problem = random_grad_check_problem(n, f, c, o.seed + i);
    const StudentParams p = StudentParams::initialize(f, 5, c, o.seed + 1000 + i);
    const GradCheckReport r = grad_check(p, problem, cfg, o.epsilon);
    worst = std::max(worst, r.max_relative_error);
    params += r.parameters;
  }
  const bool pass = worst < o.threshold;
  std::cout << fmt::format("max relative error {:.3e} over {} instances ({} parameters checked): {}\n", worst,
                           o.instances, params, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

struct SynthOptions {
  std::string preset = "two-cluster";
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_synth(const SynthOptions& o) {
  ClusterGraphOptions opts = synthetic_preset(o.preset);
  opts.seed = o.seed;
  const DatasetBundle b = make_cluster_graph(opts);
  write_dataset(b, o.out);
  std::cout << fmt::format("wrote {}: {} nodes, {} edges\n", o.out, b.graph.num_nodes(), b.graph.num_edges());
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Self-training node classifier: label-propagation teacher, MLP student, topology augmentation"};
  app.require_subcommand(1);
  std::string isa;
  std::string log_level = "warn";
  app.add_option("--isa", isa, "Kernel set: scalar or avx2 (default: best supported)");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  SpecOptions run_opts, sweep_opts;
  std::string trace_csv, augment_tsv;
  CLI::App* run = app.add_subcommand("run", "Repeated-split evaluation of one method");
  run_opts.attach(*run);
  run->add_option("--trace-csv", trace_csv, "Per-epoch trace of run 1, last iteration");
  run->add_option("--augment-dump", augment_tsv, "Edge additions/removals of run 1, last iteration");

  std::string axis, values, csv = "sweep.csv";
  CLI::App* sweep = app.add_subcommand("sweep", "One report per value of a hyperparameter");
  sweep_opts.attach(*sweep);
  sweep->add_option("--axis", axis, "lambda1, lambda2, beta-a, beta-r, steps or k")->required();
  sweep->add_option("--values", values, "Comma-separated axis values")->required();
  sweep->add_option("--csv", csv, "Output table (axis,value,mean,ci95)");

  ConvertOptions conv;
  CLI::App* convert = app.add_subcommand("convert", "Convert a dataset into the directory format");
  convert->add_option("--from", conv.from, "linqs (.content + .cites) or dir");
  convert->add_option("--content", conv.content);
  convert->add_option("--cites", conv.cites);
  convert->add_option("--input", conv.input, "Dataset directory (with --from dir)");
  convert->add_option("--out", conv.out, "Output directory")->required();
  convert->add_flag("--normalize-features", conv.normalize, "L2-normalize feature rows");

  GradCheckOptions gc;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the student gradients");
  gradcheck->add_option("--instances", gc.instances);
  gradcheck->add_option("--epsilon", gc.epsilon);
  gradcheck->add_option("--threshold", gc.threshold);
  gradcheck->add_option("--seed", gc.seed);
  gradcheck->add_option("--lambda1", gc.lambda1);
  gradcheck->add_option("--lambda2", gc.lambda2);
  gradcheck->add_option("--tau", gc.tau);

  SynthOptions syn;
  CLI::App* synth = app.add_subcommand("synth", "Write a built-in synthetic dataset");
  synth->add_option("--preset", syn.preset, "two-cluster or citation");
  synth->add_option("--seed", syn.seed);
  synth->add_option("--out", syn.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "agst: " << e.what() << '\n' << "run 'agst --help' for usage\n";
    return kUsageExit;
  }

  try {
    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") throw UsageError("unknown --log-level " + log_level);
    spdlog::set_level(level);
    if (!isa.empty()) {
      kernels::Isa chosen;
      try {
        chosen = kernels::parse_isa(isa);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (!kernels::isa_supported(chosen)) throw UsageError("--isa " + isa + " is not supported on this CPU");
      kernels::select(chosen);
    }

    if (*run) return cmd_run(run_opts, trace_csv, augment_tsv);
    if (*sweep) return cmd_sweep(sweep_opts, axis, values, csv);
    if (*convert) return cmd_convert(conv);
    if (*gradcheck) return cmd_gradcheck(gc);
    if (*synth) return cmd_synth(syn);
  } catch (const UsageError& e) {
    std::cerr << "agst: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "agst: error: " << e.what() << '\n';
    return 1;
  }
  return kUsageExit;
}

}  // namespace agst
