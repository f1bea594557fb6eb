#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "modflow/errors.hpp"
#include "modflow/graph.hpp"
#include "modflow/molgen.hpp"
#include "modflow/rng.hpp"
#include "support/test_util.hpp"

using namespace modflow;
using namespace modflow::testing;

namespace {

LabeledGraph tiny_graph(std::vector<int> labels, std::vector<Edge> edges) {
  LabeledGraph g;
  g.num_nodes = static_cast<int>(labels.size());
  g.labels = std::move(labels);
  g.edges = std::move(edges);
  return g;
}

}  // namespace

TEST_CASE("smoothed one-hot rows") {
  LabeledGraph g = tiny_graph({2}, {});
  const ScoreMatrix z = smoothed_one_hot(g, 5, 0.1);
  CHECK(z.rows == 1);
  CHECK(z.cols == 5);
  CHECK(z(0, 0) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(z(0, 1) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(z(0, 2) == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(z(0, 3) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(z(0, 4) == doctest::Approx(0.02).epsilon(1e-12));

  const ScoreMatrix exact = smoothed_one_hot(g, 5, 0.0);
  CHECK(exact(0, 2) == 1.0);
  CHECK(exact(0, 0) == 0.0);

  const ScoreMatrix uniform = smoothed_one_hot(g, 5, 1.0);
  for (int c = 0; c < 5; ++c) CHECK(uniform(0, c) == doctest::Approx(0.2).epsilon(1e-15));

  CHECK_THROWS_AS(smoothed_one_hot(g, 5, 1.5), Error);
  LabeledGraph bad = tiny_graph({7}, {});
  CHECK_THROWS_AS(smoothed_one_hot(bad, 5, 0.1), Error);
}

TEST_CASE("smoothed one-hot rows sum to one (property)") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.next_below(8));
    const int m = 1 + static_cast<int>(rng.next_below(6));
    LabeledGraph g;
    g.num_nodes = m;
    for (int i = 0; i < m; ++i) g.labels.push_back(static_cast<int>(rng.next_below(k)));
    const double eps = rng.next_double();
    const ScoreMatrix z = smoothed_one_hot(g, k, eps);
    for (int i = 0; i < m; ++i) {
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += z(i, c);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("softmax rows") {
  Matrix z(2, 3);
  z(0, 0) = 0.0;
  z(0, 1) = 0.0;
  z(0, 2) = 0.0;
  z(1, 0) = 5.0;
  z(1, 1) = 5.0 + std::log(2.0);
  z(1, 2) = -1e9;
  const Matrix p = softmax_rows(z);
  for (int c = 0; c < 3; ++c) CHECK(p(0, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(p(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(2.0 / 3).epsilon(1e-12));

  Matrix sat(1, 2);
  sat(0, 0) = 50.0;
  sat(0, 1) = 0.0;
  const Matrix ps = softmax_rows(sat);
  CHECK(std::abs(ps(0, 0) - 1.0) < 1e-15);

  Matrix bad(1, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(softmax_rows(bad), Error);
}

TEST_CASE("softmax rows sum to one and dominate overflow (property)") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.next_below(10));
    Matrix z(3, k);
    for (double& v : z.a) v = rng.uniform(-700.0, 700.0);
    const Matrix p = softmax_rows(z);
    for (int i = 0; i < 3; ++i) {
      double sum = 0.0;
      for (int c = 0; c < k; ++c) {
        CHECK(p(i, c) >= 0.0);
        sum += p(i, c);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    // argmax commutes with softmax (monotone map).
    CHECK(argmax_labels(p) == argmax_labels(z));
  }
}

TEST_CASE("argmax tie-break is the lowest index") {
  Matrix p(3, 4);
  p(0, 0) = 0.1; p(0, 1) = 0.7; p(0, 2) = 0.2; p(0, 3) = 0.0;
  p(1, 0) = 0.5; p(1, 1) = 0.5; p(1, 2) = 0.0; p(1, 3) = 0.0;
  for (int c = 0; c < 4; ++c) p(2, c) = 0.25;
  const std::vector<int> labels = argmax_labels(p);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 0);
  CHECK(labels[2] == 0);
}

TEST_CASE("log graph likelihood") {
  LabeledGraph g3 = tiny_graph({0, 1, 2}, {});
  Matrix uniform(3, 5);
  CHECK(log_graph_likelihood(g3, uniform) ==
        doctest::Approx(3.0 * std::log(0.2)).epsilon(1e-12));

  LabeledGraph g1 = tiny_graph({1}, {});
  Matrix z(1, 2);
  z(0, 0) = 0.0;
  z(0, 1) = std::log(3.0);
  // softmax = (1/4, 3/4); hand-evaluated oracle.
  CHECK(log_graph_likelihood(g1, z) == doctest::Approx(std::log(0.75)).epsilon(1e-12));

  Matrix big(1, 2);
  big(0, 0) = -60.0;
  big(0, 1) = 60.0;
  CHECK(std::abs(log_graph_likelihood(g1, big)) < 1e-12);

  Matrix wrong(2, 2);
  CHECK_THROWS_AS(log_graph_likelihood(g1, wrong), Error);
}

TEST_CASE("wl hash permutation invariance, 1000 permutations") {
  Rng rng(99);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const LabeledGraph g = random_molecule(rng, qm9_like_alphabet());
    const std::uint64_t h = wl_hash(g);
    std::vector<int> perm(g.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    for (int p = 0; p < 10; ++p) {
      rng.shuffle(perm);
      if (wl_hash(permute_graph(g, perm)) != h) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("wl hash separates structural changes") {
  LabeledGraph a = tiny_graph({0, 0, 1}, {make_edge(0, 1, 1), make_edge(1, 2, 1)});
  LabeledGraph b = tiny_graph({0, 0, 1}, {make_edge(0, 1, 2), make_edge(1, 2, 1)});
  CHECK(wl_hash(a) != wl_hash(b));

  LabeledGraph c = tiny_graph({0}, {});
  LabeledGraph n = tiny_graph({1}, {});
  CHECK(wl_hash(c) != wl_hash(n));
}

TEST_CASE("name-based wl hash matches across alphabets") {
  AtomAlphabet small = AtomAlphabet::from_symbols({"C", "O"});
  AtomAlphabet big = AtomAlphabet::from_symbols({"C", "N", "O"});
  LabeledGraph in_small = tiny_graph({0, 1}, {make_edge(0, 1, 1)});
  LabeledGraph in_big = tiny_graph({0, 2}, {make_edge(0, 1, 1)});
  CHECK(wl_hash(in_small, small) == wl_hash(in_big, big));
  CHECK(wl_hash(in_small) != wl_hash(in_big));  // index-based differs by design
}

TEST_CASE("graph validation catches structural errors") {
  CHECK_THROWS_AS(make_edge(2, 2, 1), Error);
  LabeledGraph dup = tiny_graph({0, 1}, {make_edge(0, 1, 1), make_edge(1, 0, 1)});
  CHECK_THROWS_AS(dup.validate(2), Error);
  LabeledGraph bad_order = tiny_graph({0, 1}, {make_edge(0, 1, 4)});
  CHECK_THROWS_AS(bad_order.validate(2), Error);
  LabeledGraph oob = tiny_graph({0, 1}, {make_edge(0, 2, 1)});
  CHECK_THROWS_AS(oob.validate(2), Error);
}
