#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "agst/config_file.hpp"
#include "agst/experiment.hpp"
#include "support.hpp"

using namespace agst;

namespace {

ExperimentSpec toy_spec(Method method, std::size_t runs) {
  ExperimentSpec s;
  s.dataset = "synthetic:two-cluster";
  s.k = 3;
  s.val_per_class = 5;
  s.runs = runs;
  s.method = method;
  s.seed = 100;
  return s;
}

DatasetBundle noisy_toy() { return load_experiment_dataset("synthetic:two-cluster", false); }

std::vector<double> accuracies(const Report& r) {
  std::vector<double> out;
  for (const auto& run : r.runs) out.push_back(run.accuracy);
  return out;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("mean and confidence half-width") {
    const auto [m, h] = mean_ci95({0.5, 0.7, 0.9});
    CHECK(std::abs(m - 0.7) < 1e-15);
    CHECK(std::abs(h - 1.96 * 0.2 / std::sqrt(3.0)) < 1e-15);
    CHECK(mean_ci95({0.42}).second == 0.0);
    CHECK(mean_ci95({0.3, 0.3, 0.3}).second == 0.0);
    CHECK_THROWS_AS(mean_ci95({}), Error);
  }

  TEST_CASE("report aggregates its runs") {
    const DatasetBundle b = noisy_toy();
    const Report r = run_experiment(b, toy_spec(Method::Agst, 4));
    REQUIRE(r.runs.size() == 4);
    const auto acc = accuracies(r);
    double sum = 0.0;
    for (double a : acc) sum += a;
    CHECK(std::abs(r.mean - sum / 4.0) < 1e-12);
    double ss = 0.0;
    for (double a : acc) ss += (a - r.mean) * (a - r.mean);
    CHECK(std::abs(r.ci95 - 1.96 * std::sqrt(ss / 3.0) / 2.0) < 1e-12);
    CHECK(r.mean >= 0.0);
    CHECK(r.mean <= 1.0);
    CHECK(r.ci95 >= 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r.runs[i].index == i);
      CHECK(r.runs[i].seed == 100 + i);
      CHECK(r.runs[i].iterations.size() == 3);
    }
  }

  TEST_CASE("single run has zero half-width") {
    const Report r = run_experiment(noisy_toy(), toy_spec(Method::Agst, 1));
    CHECK(r.ci95 == 0.0);
  }

  TEST_CASE("agst-base is agst with the ablation overrides") {
    const DatasetBundle b = noisy_toy();
    ExperimentSpec manual = toy_spec(Method::Agst, 3);
    manual.cfg.train.lambda2 = 0.0;
    manual.cfg.augment = {0.0, 0.0};
    const Report base = run_experiment(b, toy_spec(Method::AgstBase, 3));
    const Report same = run_experiment(b, manual);
    CHECK(accuracies(base) == accuracies(same));
    CHECK(base.mean == same.mean);
    CHECK(base.ci95 == same.ci95);
  }

  TEST_CASE("method overrides") {
    AgstConfig base;
    const AgstConfig nc = effective_config(Method::NoContrast, base);
    CHECK(nc.train.lambda2 == 0.0);
    CHECK(nc.augment.beta_add == base.augment.beta_add);
    const AgstConfig na = effective_config(Method::NoAugment, base);
    CHECK(na.augment.beta_add == 0.0);
    CHECK(na.augment.beta_remove == 0.0);
    CHECK(na.train.lambda2 == base.train.lambda2);
    const AgstConfig mlp = effective_config(Method::MlpOnly, base);
    CHECK(mlp.train.lambda1 == 0.0);
    CHECK(mlp.train.lambda2 == 0.0);
    CHECK(mlp.iterations == 1);
    CHECK(mlp.augment.beta_add == 0.0);
  }

  TEST_CASE("lp-only reports the teacher accuracy") {
    const DatasetBundle b = noisy_toy();
    const ExperimentSpec spec = toy_spec(Method::LpOnly, 3);
    const Report r = run_experiment(b, spec);
    for (const auto& run : r.runs) {
      const SplitSpec s = make_split(b, spec.split_mode(), run.seed);
      const auto pred = argmax_rows(propagate_labels(normalize_adjacency(b.graph), b, s, {}).matrix);
      CHECK(run.accuracy == accuracy(pred, b.labels, s.test));
    }
  }

  TEST_CASE("recorded runs replay exactly") {
    const DatasetBundle b = noisy_toy();
    const Report r = run_experiment(b, toy_spec(Method::Agst, 4));
    for (const auto& run : r.runs) {
      ExperimentSpec replay = toy_spec(Method::Agst, 1);
      replay.seed = run.seed;
      const Report one = run_experiment(b, replay);
      CHECK(one.runs[0].accuracy == run.accuracy);
      CHECK(one.runs[0].split_seed == run.split_seed);
    }
  }

  TEST_CASE("worker pool size does not change results") {
    const DatasetBundle b = noisy_toy();
    ExperimentSpec spec = toy_spec(Method::NoContrast, 5);
    const Report seq = run_experiment(b, spec);
    spec.threads = 3;
    const Report par = run_experiment(b, spec);
    CHECK(accuracies(seq) == accuracies(par));
    CHECK(seq.mean == par.mean);
  }

  TEST_CASE("a failing run aborts with its seed") {
    const DatasetBundle b = noisy_toy();
    ExperimentSpec spec = toy_spec(Method::Agst, 2);
    spec.k = 19;  // 20 nodes per class cannot hold 19 + 5
    try {
      run_experiment(b, spec);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("seed 100") != std::string::npos);
    }
  }

  TEST_CASE("single-value sweep equals run_experiment") {
    const DatasetBundle b = noisy_toy();
    const ExperimentSpec spec = toy_spec(Method::Agst, 2);
    const auto rows = run_sweep(b, spec, SweepAxis::Lambda2, {spec.cfg.train.lambda2});
    REQUIRE(rows.size() == 1);
    CHECK(accuracies(rows[0].report) == accuracies(run_experiment(b, spec)));
    CHECK_THROWS_AS(run_sweep(b, spec, SweepAxis::Lambda2, {}), UsageError);
    CHECK_THROWS_AS(run_sweep(b, spec, SweepAxis::Steps, {2.5}), UsageError);
  }

  TEST_CASE("propagation steps sweep is non-decreasing on a long-range toy") {
    // Sparse intra-class rings: one propagation step cannot reach most nodes.
    ClusterGraphOptions o;
    o.nodes = 80;
    o.intra_degree = 2.0;
    o.noise_edge_fraction = 0.0;
    const DatasetBundle b = make_cluster_graph(o);
    ExperimentSpec spec;
    spec.k = 3;
    spec.val_per_class = 5;
    spec.runs = 10;
    spec.method = Method::LpOnly;
    const auto rows = run_sweep(b, spec, SweepAxis::Steps, {1, 2, 5, 10, 20});
    for (std::size_t i = 1; i < 4; ++i) CHECK(rows[i].report.mean >= rows[i - 1].report.mean);
    CHECK(rows[3].report.mean > rows[0].report.mean);
  }

  TEST_CASE("sweep CSV") {
    testing::TempDir dir("sweep");
    Report r;
    r.mean = 0.5;
    r.ci95 = 0.25;
    write_sweep_csv({{SweepAxis::BetaAdd, 0.4, r}}, dir / "s.csv");
    std::ifstream in(dir / "s.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "axis,value,mean,ci95");
    CHECK(row == "beta-a,0.4,0.5,0.25");
  }

  TEST_CASE("lambda2 grid axis parses") {
    CHECK(parse_axis("lambda2") == SweepAxis::Lambda2);
    CHECK(parse_axis("k") == SweepAxis::K);
    CHECK_THROWS_AS(parse_axis("gamma"), UsageError);
  }

  TEST_CASE("settings: parsing and validation") {
    ExperimentSpec s;
    apply_setting(s, "lambda2", "0.05");
    apply_setting(s, "iterations", "2");
    apply_setting(s, "method", "no-augment");
    apply_setting(s, "warm-start", "true");
    CHECK(s.cfg.train.lambda2 == 0.05);
    CHECK(s.cfg.iterations == 2);
    CHECK(s.method == Method::NoAugment);
    CHECK(s.cfg.warm_start);
    CHECK_THROWS_AS(apply_setting(s, "lamda2", "1"), UsageError);
    CHECK_THROWS_AS(apply_setting(s, "runs", "-1"), UsageError);
    CHECK_THROWS_AS(apply_setting(s, "tau", "abc"), UsageError);
    CHECK_THROWS_AS(apply_setting(s, "method", "gcn"), UsageError);

    ExperimentSpec k0;
    apply_setting(k0, "k", "0");
    CHECK_THROWS_AS(k0.validate(), UsageError);

    ExperimentSpec contradictory;
    apply_setting(contradictory, "protocol", "imbalanced");
    apply_setting(contradictory, "k", "5");
    CHECK_THROWS_AS(contradictory.validate(), UsageError);

    ExperimentSpec rate_balanced;
    apply_setting(rate_balanced, "rate", "0.01");
    CHECK_THROWS_AS(rate_balanced.validate(), UsageError);

    ExperimentSpec runs0;
    runs0.runs = 0;
    CHECK_THROWS_AS(runs0.validate(), UsageError);

    ExperimentSpec tau0;
    tau0.cfg.train.tau = 0.0;
    CHECK_THROWS_AS(tau0.validate(), UsageError);
  }

  TEST_CASE("config file") {
    testing::TempDir dir("cfg");
    testing::write_text(dir / "a.conf", "# comment\n\nlambda1 = 0.5\n  runs=3  \n");
    const auto kv = read_key_value_file(dir / "a.conf");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0] == std::pair<std::string, std::string>{"lambda1", "0.5"});
    CHECK(kv[1] == std::pair<std::string, std::string>{"runs", "3"});
    testing::write_text(dir / "b.conf", "lambda1 0.5\n");
    try {
      read_key_value_file(dir / "b.conf");
      FAIL("expected error");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("b.conf:1") != std::string::npos);
    }
    CHECK_THROWS_AS(read_key_value_file(dir / "missing.conf"), UsageError);
  }

  TEST_CASE("dataset lookup by name") {
    testing::TempDir dir("data");
    const DatasetBundle b = noisy_toy();
    write_dataset(b, dir / "toy");
    ::setenv("AGST_DATA_DIR", dir.path().c_str(), 1);
    CHECK(load_experiment_dataset("toy", false).graph == b.graph);
    ::unsetenv("AGST_DATA_DIR");
    CHECK(load_experiment_dataset((dir / "toy").string(), false).graph == b.graph);
    CHECK_THROWS_AS(load_experiment_dataset("no-such-dataset", false), Error);
    CHECK_THROWS_AS(load_experiment_dataset("synthetic:nope", false), UsageError);
  }

  TEST_CASE("JSON report schema") {
    const Report r = run_experiment(noisy_toy(), toy_spec(Method::Agst, 2));
    const nlohmann::json j = report_to_json(r);
    CHECK(j.at("config").at("method") == "agst");
    CHECK(j.at("config").at("protocol").at("k") == 3);
    CHECK(j.at("runs").size() == 2);
    CHECK(j.at("runs")[0].at("seed") == 100);
    CHECK(j.at("runs")[0].at("accuracy").is_number());
    CHECK(j.at("runs")[0].at("iterations").size() == 3);
    CHECK(j.at("mean") == r.mean);
    CHECK(j.at("ci95") == r.ci95);
    CHECK(j.at("wall_ms").is_number());
  }
}
