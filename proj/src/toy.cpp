#include "modflow/toy.hpp"

#include <fstream>

#include "modflow/errors.hpp"

namespace modflow {

const AtomAlphabet& toy_alphabet() {
  static const AtomAlphabet alphabet = [] {
    AtomAlphabet a;
    a.mode = AlphabetMode::clusters;
    a.labels = {"0", "1"};
    a.max_valence = {-1, -1};
    a.validate();
    return a;
  }();
  return alphabet;
}

namespace {

LabeledGraph make_lattice(int n) {
  LabeledGraph g;
  g.num_nodes = n * n;
  g.labels.assign(g.num_nodes, 0);
  g.coord_dim = 2;
  g.coords.resize(static_cast<std::size_t>(g.num_nodes) * 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int v = i * n + j;
      g.coords[2 * v] = static_cast<double>(i);
      g.coords[2 * v + 1] = static_cast<double>(j);
      if (i + 1 < n) g.edges.push_back(make_edge(v, (i + 1) * n + j, 1));
      if (j + 1 < n) g.edges.push_back(make_edge(v, i * n + j + 1, 1));
    }
  }
  return g;
}

}  // namespace

LabeledGraph make_chessboard(int n, int block) {
  if (n < 1 || block < 1 || n % block != 0) {
    raise(ErrorCode::invalid_argument, "block size must divide the grid size");
  }
  LabeledGraph g = make_lattice(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g.labels[i * n + j] = ((i / block) + (j / block)) % 2;
    }
  }
  return g;
}

LabeledGraph make_stripes(int n, int stripe_w) {
  if (n < 1 || stripe_w < 1) {
    raise(ErrorCode::invalid_argument, "stripe width must be at least 1");
  }
  LabeledGraph g = make_lattice(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g.labels[i * n + j] = (j / stripe_w) % 2;
    }
  }
  return g;
}

LabeledGraph make_grid(const GridPattern& pattern) {
  return pattern.kind == GridPattern::Kind::chessboard
             ? make_chessboard(pattern.n, pattern.block)
             : make_stripes(pattern.n, pattern.block);
}

double pattern_accuracy(const LabeledGraph& generated, const LabeledGraph& target) {
  if (generated.num_nodes != target.num_nodes) {
    raise(ErrorCode::shape_mismatch, "pattern accuracy needs matching topologies");
  }
  int agree = 0;
  for (int i = 0; i < generated.num_nodes; ++i) {
    if (generated.labels[i] == target.labels[i]) ++agree;
  }
  const double frac = agree / static_cast<double>(generated.num_nodes);
  return std::max(frac, 1.0 - frac);
}

LabeledGraph invert_labels(const LabeledGraph& grid) {
  LabeledGraph out = grid;
  for (int& l : out.labels) l = 1 - l;
  return out;
}

void write_pgm(const std::string& path, const LabeledGraph& grid, int n) {
  if (grid.num_nodes != n * n) {
    raise(ErrorCode::shape_mismatch, "grid size does not match the node count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io, "cannot open '" + path + "'");
  out << "P2\n" << n << ' ' << n << "\n1\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out << grid.labels[i * n + j];
      out << (j + 1 == n ? '\n' : ' ');
    }
  }
  if (!out) raise(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace modflow
