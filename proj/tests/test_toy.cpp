#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "modflow/errors.hpp"
#include "modflow/rng.hpp"
#include "modflow/toy.hpp"

using namespace modflow;

TEST_CASE("chessboard patterns") {
  const LabeledGraph g2 = make_chessboard(2, 1);
  CHECK(g2.labels == std::vector<int>{0, 1, 1, 0});
  CHECK(g2.edges.size() == 4);
  CHECK(g2.coord_dim == 2);

  const LabeledGraph g4 = make_chessboard(4, 1);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(g4.labels[i * 4 + j] == (i + j) % 2);
    }
  }

  const LabeledGraph g16 = make_chessboard(16, 4);
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      CHECK(g16.labels[i * 16 + j] == ((i / 4) + (j / 4)) % 2);
    }
  }
  // 4-neighborhood edge count: 2 n (n-1).
  CHECK(g16.edges.size() == 2u * 16u * 15u);

  CHECK_THROWS_AS(make_chessboard(4, 3), Error);
  CHECK_THROWS_AS(make_chessboard(4, 0), Error);
}

TEST_CASE("stripe patterns") {
  const LabeledGraph g = make_stripes(2, 1);
  CHECK(g.labels == std::vector<int>{0, 1, 0, 1});

  const LabeledGraph wide = make_stripes(4, 4);
  for (int l : wide.labels) CHECK(l == 0);

  const LabeledGraph g20 = make_stripes(20, 2);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      CHECK(g20.labels[i * 20 + j] == (j / 2) % 2);
    }
  }
  CHECK_THROWS_AS(make_stripes(4, 0), Error);
}

TEST_CASE("builders are deterministic and idempotent") {
  const LabeledGraph a = make_chessboard(8, 2);
  const LabeledGraph b = make_chessboard(8, 2);
  CHECK(a.labels == b.labels);
  CHECK(a.edges == b.edges);
  CHECK(a.coords == b.coords);
}

TEST_CASE("pattern accuracy is polarity invariant") {
  const LabeledGraph target = make_chessboard(4, 1);
  CHECK(pattern_accuracy(target, target) == 1.0);
  CHECK(pattern_accuracy(invert_labels(target), target) == 1.0);

  LabeledGraph off_by_one = target;
  off_by_one.labels[0] = 1 - off_by_one.labels[0];
  CHECK(pattern_accuracy(off_by_one, target) == doctest::Approx(15.0 / 16.0));

  const LabeledGraph small = make_chessboard(2, 1);
  CHECK_THROWS_AS(pattern_accuracy(small, target), Error);
}

TEST_CASE("random labels land near the exact polarity-adjusted expectation") {
  // E[max(A, 1-A)] with A ~ Binomial(N, 1/2)/N, computed exactly.
  const int n = 4;
  const int nodes = n * n;
  double expected = 0.0;
  {
    // binomial pmf over k successes
    std::vector<double> logfact(nodes + 1, 0.0);
    for (int i = 1; i <= nodes; ++i) logfact[i] = logfact[i - 1] + std::log(i);
    for (int k = 0; k <= nodes; ++k) {
      const double logp = logfact[nodes] - logfact[k] - logfact[nodes - k] -
                          nodes * std::log(2.0);
      expected += std::exp(logp) * (std::max(k, nodes - k) / static_cast<double>(nodes));
    }
  }

  const LabeledGraph target = make_chessboard(n, 1);
  Rng rng(17);
  const int trials = 4000;
  double mean = 0.0;
  for (int t = 0; t < trials; ++t) {
    LabeledGraph random_grid = target;
    for (int& l : random_grid.labels) l = static_cast<int>(rng.next_below(2));
    mean += pattern_accuracy(random_grid, target);
  }
  mean /= trials;
  // Accuracy is bounded by 1, so its variance is at most 1/4.
  const double sigma = 0.5 / std::sqrt(static_cast<double>(trials));
  CHECK(std::abs(mean - expected) <= 4.0 * sigma);
  CHECK(expected > 0.5);
  CHECK(expected < 0.7);
}

TEST_CASE("pgm export is valid P2") {
  const LabeledGraph g = make_chessboard(2, 1);
  const auto path = std::filesystem::temp_directory_path() / "modflow_toy.pgm";
  write_pgm(path.string(), g, 2);
  std::ifstream in(path);
  std::string magic;
  int w = 0, h = 0, maxval = -1;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 2);
  CHECK(h == 2);
  CHECK(maxval == 1);
  std::vector<int> values(4, -1);
  for (int& v : values) in >> v;
  CHECK(values == std::vector<int>{0, 1, 1, 0});
  std::filesystem::remove(path);
}

TEST_CASE("toy alphabet is a two-label cluster alphabet") {
  const AtomAlphabet& a = toy_alphabet();
  CHECK(a.size() == 2);
  CHECK(a.mode == AlphabetMode::clusters);
  CHECK(a.is_cluster_label(0));
}
