#include <doctest.h>

#include <set>

#include "agst/self_train.hpp"
#include "agst/synthetic.hpp"
#include "support.hpp"

using namespace agst;

namespace {

struct Toy {
  DatasetBundle bundle;
  SplitSpec split;
};

Toy clean_two_cluster(std::uint64_t seed) {
  ClusterGraphOptions o;
  o.nodes = 40;
  o.noise_edge_fraction = 0.0;
  o.seed = seed;
  Toy t{make_cluster_graph(o), {}};
  t.split = make_split(t.bundle, Balanced{3, 5}, seed);
  return t;
}

std::set<std::pair<NodeId, NodeId>> edge_set(const SparseGraph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const Edge& e : g.edges()) s.emplace(e.u, e.v);
  return s;
}

}  // namespace

TEST_SUITE("self-train") {
  TEST_CASE("clean two-cluster toy is solved in every iteration") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Toy t = clean_two_cluster(seed);
      AgstConfig cfg;
      cfg.seed = seed;
      const RunResult r = run_agst(t.bundle, t.split, cfg);
      REQUIRE(r.per_iteration.size() == 3);
      for (const auto& it : r.per_iteration) CHECK(it.test_acc == 1.0);
      CHECK(r.predictions.size() == t.bundle.num_nodes());
      CHECK(accuracy(r.predictions, t.bundle.labels, t.split.test) == 1.0);
      CHECK(r.selected_iteration == 2);
    }
  }

  TEST_CASE("degenerate loop equals one teacher-then-student pass") {
    const Toy t = clean_two_cluster(5);
    AgstConfig cfg;
    cfg.iterations = 1;
    cfg.augment = {0.0, 0.0};
    cfg.train.lambda2 = 0.0;
    cfg.seed = 17;
    const RunResult r = run_agst(t.bundle, t.split, cfg);

    const SoftLabels soft =
        to_distribution(propagate_labels(normalize_adjacency(t.bundle.graph), t.bundle, t.split, cfg.lp));
    TrainConfig tc = cfg.train;
    tc.seed = student_seed(cfg.seed, 0);
    const TrainResult direct = train_student(t.bundle, t.split, soft, tc);
    CHECK(r.final_params == direct.params);
    CHECK(r.predictions == predict(direct.params, t.bundle));
  }

  TEST_CASE("same seed gives bitwise identical results") {
    ClusterGraphOptions o;
    o.nodes = 60;
    o.classes = 3;
    o.seed = 8;
    const DatasetBundle b = make_cluster_graph(o);
    const SplitSpec s = make_split(b, Balanced{3, 5}, 8);
    AgstConfig cfg;
    cfg.seed = 8;
    const RunResult a = run_agst(b, s, cfg), c = run_agst(b, s, cfg);
    CHECK(a.final_params == c.final_params);
    CHECK(a.predictions == c.predictions);
    REQUIRE(a.per_iteration.size() == c.per_iteration.size());
    for (std::size_t i = 0; i < a.per_iteration.size(); ++i) {
      CHECK(a.per_iteration[i].test_acc == c.per_iteration[i].test_acc);
      CHECK(a.per_iteration[i].edges_added == c.per_iteration[i].edges_added);
      CHECK(a.per_iteration[i].trace.size() == c.per_iteration[i].trace.size());
    }
  }

  TEST_CASE("each iteration re-bases on the original graph") {
    ClusterGraphOptions o;
    o.nodes = 60;
    o.classes = 3;
    o.noise_edge_fraction = 0.2;
    o.seed = 2;
    const DatasetBundle b = make_cluster_graph(o);
    const SplitSpec s = make_split(b, Balanced{3, 5}, 2);
    AgstConfig cfg;
    cfg.seed = 2;
    cfg.augment = {0.3, 0.2};
    const auto original = edge_set(b.graph);
    std::vector<std::size_t> augmented_sizes;
    const RunResult r = run_agst(b, s, cfg, [&](std::size_t, const AugmentResult& aug) {
      auto expected = original;
      for (const auto& e : aug.removed) expected.erase({e.i, e.j});
      for (const auto& e : aug.added) expected.emplace(e.i, e.j);
      CHECK(edge_set(aug.graph) == expected);
      augmented_sizes.push_back(aug.graph.num_edges());
    });
    // The teacher of iteration i + 1 sees the graph produced in iteration i.
    REQUIRE(augmented_sizes.size() == 3);
    CHECK(r.per_iteration[0].edges_in == b.graph.num_edges());
    CHECK(r.per_iteration[1].edges_in == augmented_sizes[0]);
    CHECK(r.per_iteration[2].edges_in == augmented_sizes[1]);
  }

  TEST_CASE("best-iteration selection and warm start") {
    ClusterGraphOptions o;
    o.nodes = 60;
    o.classes = 3;
    o.noise_edge_fraction = 0.3;
    o.seed = 6;
    const DatasetBundle b = make_cluster_graph(o);
    const SplitSpec s = make_split(b, Balanced{3, 5}, 6);
    AgstConfig cfg;
    cfg.seed = 6;
    cfg.select_best_iteration = true;
    const RunResult r = run_agst(b, s, cfg);
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < r.per_iteration.size(); ++i)
      if (r.per_iteration[i].val_acc > best) best = r.per_iteration[i].val_acc, arg = i;
    CHECK(r.selected_iteration == arg);
    CHECK(r.test_accuracy == r.per_iteration[arg].test_acc);

    cfg.select_best_iteration = false;
    cfg.warm_start = true;
    const RunResult w = run_agst(b, s, cfg);
    CHECK(w.per_iteration.size() == 3);
    CHECK(w.final_params.all_finite());
  }

  TEST_CASE("errors carry the iteration index") {
    const Toy t = clean_two_cluster(1);
    SplitSpec s = t.split;
    s.labeled.resize(1);  // one class missing
    try {
      run_agst(t.bundle, s, AgstConfig{});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
    }
    AgstConfig bad;
    bad.iterations = 0;
    CHECK_THROWS_AS(run_agst(t.bundle, t.split, bad), Error);
  }

  TEST_CASE("student seeds differ per iteration") {
    CHECK(student_seed(1, 0) != student_seed(1, 1));
    CHECK(student_seed(1, 0) != student_seed(2, 0));
    CHECK(student_seed(3, 2) == student_seed(3, 2));
  }
}
