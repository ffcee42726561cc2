#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "agst/cli.hpp"
#include "agst/dataset.hpp"
#include "agst/experiment.hpp"
#include "support.hpp"

using namespace agst;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "agst");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return cli_main(static_cast<int>(args.size()), argv.data());
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("run writes a JSON report") {
    testing::TempDir dir("cli_run");
    const auto out = (dir / "report.json").string();
    CHECK(run_cli({"run", "--dataset", "synthetic:two-cluster", "--k", "3", "--val-per-class", "5", "--runs", "2",
                   "--out", out}) == 0);
    const auto j = read_json(out);
    CHECK(j.at("runs").size() == 2);
    CHECK(j.contains("mean"));
    CHECK(j.contains("ci95"));
    CHECK(j.contains("wall_ms"));
  }

  TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli({"run", "--k", "0"}) == 2);
    CHECK(run_cli({"run", "--no-such-flag", "1"}) == 2);
    CHECK(run_cli({"run", "--protocol", "imbalanced", "--k", "5", "--dataset", "synthetic:two-cluster"}) == 2);
    CHECK(run_cli({"run", "--runs", "0", "--dataset", "synthetic:two-cluster"}) == 2);
    CHECK(run_cli({"run", "--method", "gcn"}) == 2);
    CHECK(run_cli({"bogus"}) == 2);
    CHECK(run_cli({}) == 2);
  }

  TEST_CASE("unwritable output path fails before running") {
    CHECK(run_cli({"run", "--dataset", "synthetic:two-cluster", "--k", "3", "--val-per-class", "5", "--runs", "1",
                   "--out", "/nonexistent-dir/x/report.json"}) != 0);
  }

  TEST_CASE("missing dataset is a runtime error") {
    testing::TempDir dir("cli_missing");
    CHECK(run_cli({"run", "--dataset", "definitely-missing", "--out", (dir / "r.json").string()}) == 1);
  }

  TEST_CASE("config file with command-line override") {
    testing::TempDir dir("cli_cfg");
    testing::write_text(dir / "run.conf",
                        "dataset = synthetic:two-cluster\nk = 3\nval-per-class = 5\nruns = 3\nmethod = lp-only\n");
    const auto out = (dir / "r.json").string();
    CHECK(run_cli({"run", "--config", (dir / "run.conf").string(), "--runs", "2", "--out", out}) == 0);
    const auto j = read_json(out);
    CHECK(j.at("runs").size() == 2);
    CHECK(j.at("config").at("method") == "lp-only");
  }

  TEST_CASE("gradcheck passes") { CHECK(run_cli({"gradcheck"}) == 0); }

  TEST_CASE("sweep writes the CSV table") {
    testing::TempDir dir("cli_sweep");
    const auto csv = (dir / "s.csv").string();
    CHECK(run_cli({"sweep", "--dataset", "synthetic:two-cluster", "--k", "3", "--val-per-class", "5", "--runs", "1",
                   "--method", "lp-only", "--axis", "steps", "--values", "1,2,5", "--csv", csv, "--out",
                   (dir / "s.json").string()}) == 0);
    std::ifstream in(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "axis,value,mean,ci95");
    CHECK(lines[1].rfind("steps,1,", 0) == 0);
    CHECK(run_cli({"sweep", "--dataset", "synthetic:two-cluster", "--axis", "steps", "--values", "1,x"}) == 2);
  }

  TEST_CASE("convert and synth") {
    testing::TempDir dir("cli_conv");
    testing::write_text(dir / "c.content", "a\t1\t0\tX\nb\t0\t1\tY\n");
    testing::write_text(dir / "c.cites", "a\tb\n");
    CHECK(run_cli({"convert", "--content", (dir / "c.content").string(), "--cites", (dir / "c.cites").string(),
                   "--out", (dir / "conv").string()}) == 0);
    const DatasetBundle b = load_dataset(dir / "conv");
    CHECK(b.num_nodes() == 2);
    CHECK(b.graph.num_edges() == 1);
    CHECK(run_cli({"convert", "--out", (dir / "x").string()}) == 2);

    CHECK(run_cli({"synth", "--preset", "two-cluster", "--out", (dir / "toy").string()}) == 0);
    CHECK(load_dataset(dir / "toy").num_nodes() == 40);
  }

  TEST_CASE("trace and augmentation exports") {
    testing::TempDir dir("cli_exp");
    CHECK(run_cli({"run", "--dataset", "synthetic:two-cluster", "--k", "3", "--val-per-class", "5", "--runs", "1",
                   "--out", (dir / "r.json").string(), "--trace-csv", (dir / "t.csv").string(), "--augment-dump",
                   (dir / "a.tsv").string()}) == 0);
    CHECK(std::filesystem::file_size(dir / "t.csv") > 0);
    CHECK(std::filesystem::file_size(dir / "a.tsv") > 0);
  }

  TEST_CASE("isa flag") {
    CHECK(run_cli({"--isa", "scalar", "gradcheck", "--instances", "2"}) == 0);
    CHECK(run_cli({"--isa", "sparc", "gradcheck"}) == 2);
  }
}
