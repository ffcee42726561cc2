#include <doctest.h>

#include <cmath>
#include <random>

#include "agst/teacher.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace agst;

namespace {

using Pairs = std::vector<std::pair<NodeId, NodeId>>;

double max_norm(const DenseMatrix& a, const DenseMatrix& b) { return max_abs_diff(a, b); }

double total(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s;
}

double frobenius(const DenseMatrix& a, const DenseMatrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a.values()[k] - b.values()[k]) * (a.values()[k] - b.values()[k]);
  return std::sqrt(s);
}

DatasetBundle two_node_bundle() {
  DatasetBundle b;
  b.graph = SparseGraph::from_pairs(2, Pairs{{0, 1}});
  b.features = CsrMatrix::from_dense(DenseMatrix(2, 1, 1.0));
  b.labels = {0, kUnknownLabel};
  b.num_classes = 1;
  return b;
}

}  // namespace

TEST_SUITE("teacher-lp") {
  TEST_CASE("two-node fixture converges to [0.75, 0.25]") {
    const DatasetBundle b = two_node_bundle();
    SplitSpec s;
    s.labeled = {0};
    const NormalizedOperator op = normalize_adjacency(b.graph);
    const SoftLabels y = propagate_labels(op, b, s, {0.5, 200});
    CHECK_FALSE(y.normalized);
    CHECK(std::abs(y.matrix(0, 0) - 0.75) < 1e-12);
    CHECK(std::abs(y.matrix(1, 0) - 0.25) < 1e-12);

    const SoftLabels oracle = closed_form_oracle(op, b, s, 0.5);
    CHECK(std::abs(oracle.matrix(0, 0) - 0.75) < 1e-14);
    CHECK(std::abs(oracle.matrix(1, 0) - 0.25) < 1e-14);
  }

  TEST_CASE("one step equals alpha S Y0 + (1 - alpha) Y0") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const testing::LpInstance inst = testing::random_lp_instance(seed);
      const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
      const DenseMatrix y0 = seed_label_matrix(inst.bundle, inst.split);
      const DenseMatrix sy = testing::dense_product(testing::dense_normalized(inst.bundle.graph), y0);
      DenseMatrix expected(y0.rows(), y0.cols());
      for (std::size_t k = 0; k < expected.size(); ++k)
        expected.values()[k] = 0.9 * sy.values()[k] + 0.1 * y0.values()[k];
      CHECK(max_norm(propagate_labels(op, inst.bundle, inst.split, {0.9, 1}).matrix, expected) < 1e-14);
    }
  }

  TEST_CASE("tiny alpha returns the seed matrix") {
    const testing::LpInstance inst = testing::random_lp_instance(5);
    const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
    const DenseMatrix y0 = seed_label_matrix(inst.bundle, inst.split);
    CHECK(max_norm(propagate_labels(op, inst.bundle, inst.split, {1e-12, 10}).matrix, y0) < 1e-10);
    CHECK(max_norm(closed_form_oracle(op, y0, 1e-12).matrix, y0) < 1e-10);
  }

  TEST_CASE("isolated nodes: oracle returns Y") {
    DatasetBundle b;
    b.graph = SparseGraph::from_pairs(4, Pairs{});
    b.features = CsrMatrix::from_dense(DenseMatrix(4, 1, 1.0));
    b.labels = {0, 1, 0, 1};
    b.num_classes = 2;
    SplitSpec s;
    s.labeled = {0, 1};
    const DenseMatrix y0 = seed_label_matrix(b, s);
    CHECK(max_norm(closed_form_oracle(normalize_adjacency(b.graph), b, s, 0.9).matrix, y0) < 1e-14);
  }

  TEST_CASE("missing class in the labeled set is an error") {
    const testing::LpInstance inst = testing::random_lp_instance(1);
    SplitSpec s;
    s.labeled = {0};
    DatasetBundle b = inst.bundle;
    b.num_classes = 2;
    for (auto& l : b.labels) l = l % 2;
    CHECK_THROWS_AS(propagate_labels(normalize_adjacency(b.graph), b, s, {}), Error);
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS((LpConfig{0.0, 10}.validate()), Error);
    CHECK_THROWS_AS((LpConfig{1.0, 10}.validate()), Error);
    CHECK_THROWS_AS((LpConfig{0.5, 0}.validate()), Error);
    CHECK_NOTHROW(LpConfig{}.validate());
  }

  TEST_CASE("long propagation matches the closed form on random graphs") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const testing::LpInstance inst = testing::random_lp_instance(seed);
      const double alpha = seed % 2 ? 0.9 : 0.5;
      const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
      const SoftLabels it = propagate_labels(op, inst.bundle, inst.split, {alpha, 200});
      const SoftLabels cf = closed_form_oracle(op, inst.bundle, inst.split, alpha);
      CHECK(max_norm(it.matrix, cf.matrix) < 1e-6);
    }
  }

  TEST_CASE("closed form solves the fixed-point equation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const testing::LpInstance inst = testing::random_lp_instance(100 + seed);
      const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
      const DenseMatrix y0 = seed_label_matrix(inst.bundle, inst.split);
      const DenseMatrix y = closed_form_oracle(op, y0, 0.9).matrix;
      const DenseMatrix sy = spmm(op, y);
      DenseMatrix rhs(y.rows(), y.cols());
      for (std::size_t k = 0; k < y.size(); ++k) rhs.values()[k] = 0.9 * sy.values()[k] + 0.1 * y0.values()[k];
      CHECK(max_norm(y, rhs) < 1e-12);
    }
  }

  TEST_CASE("distance to the fixed point contracts by alpha") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const testing::LpInstance inst = testing::random_lp_instance(200 + seed);
      const double alpha = seed % 2 ? 0.9 : 0.5;
      const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
      const DenseMatrix y0 = seed_label_matrix(inst.bundle, inst.split);
      const DenseMatrix star = closed_form_oracle(op, y0, alpha).matrix;
      double prev = frobenius(y0, star);
      for (std::size_t t = 1; t <= 30; ++t) {
        const double d = frobenius(propagate(op, y0, {alpha, t}), star);
        CHECK(d <= alpha * prev + 1e-12);
        prev = d;
      }
    }
  }

  TEST_CASE("total mass stays within the teleport bounds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const testing::LpInstance inst = testing::random_lp_instance(300 + seed);
      const double alpha = 0.9;
      const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
      const DenseMatrix y0 = seed_label_matrix(inst.bundle, inst.split);
      const double s0 = total(y0);
      const double s_star = total(closed_form_oracle(op, y0, alpha).matrix);
      CHECK(s_star <= s0 / (1.0 - alpha) + 1e-9);
      for (std::size_t t = 1; t <= 20; ++t) {
        const double s = total(propagate(op, y0, {alpha, t}));
        CHECK(s >= (1.0 - alpha) * s0 - 1e-12);
        CHECK(s <= s0 / (1.0 - alpha) + 1e-12);
      }
    }
  }

  TEST_CASE("labeled nodes keep their class at small alpha") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const testing::LpInstance inst = testing::random_lp_instance(400 + seed);
      const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
      const std::vector<int> pred = argmax_rows(propagate_labels(op, inst.bundle, inst.split, {0.1, 10}).matrix);
      for (NodeId i : inst.split.labeled) CHECK(pred[i] == inst.bundle.labels[i]);
    }
  }

  TEST_CASE("tolerance mode reaches the closed form") {
    const testing::LpInstance inst = testing::random_lp_instance(77);
    const NormalizedOperator op = normalize_adjacency(inst.bundle.graph);
    const DenseMatrix y0 = seed_label_matrix(inst.bundle, inst.split);
    std::size_t steps = 0;
    const DenseMatrix y = propagate_to_tolerance(op, y0, 0.9, 1e-13, 10000, &steps);
    CHECK(steps > 0);
    CHECK(steps < 10000);
    CHECK(max_norm(y, closed_form_oracle(op, y0, 0.9).matrix) < 1e-11);
  }

  TEST_CASE("to_distribution") {
    SoftLabels s{DenseMatrix(3, 4), false};
    s.matrix(0, 0) = 0.75;
    s.matrix(0, 1) = 0.25;
    s.matrix(1, 0) = 2.0;
    s.matrix(1, 1) = 2.0;
    const SoftLabels d = to_distribution(s);
    CHECK(d.normalized);
    CHECK(d.matrix(0, 0) == 0.75);
    CHECK(d.matrix(0, 1) == 0.25);
    CHECK(d.matrix(0, 2) == 0.0);
    CHECK(d.matrix(1, 0) == 0.5);
    CHECK(d.matrix(1, 1) == 0.5);
    for (std::size_t j = 0; j < 4; ++j) CHECK(d.matrix(2, j) == 0.25);
  }

  TEST_CASE("argmax ties go to the lowest index") {
    DenseMatrix m(2, 3);
    m(0, 1) = m(0, 2) = 0.5;
    CHECK(argmax_rows(m) == std::vector<int>{1, 0});
  }
}
