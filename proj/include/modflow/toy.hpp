#pragma once

#include <string>

#include "modflow/alphabet.hpp"
#include "modflow/graph.hpp"

namespace modflow {

// Binary grid datasets on an n x n 4-neighborhood lattice with integer
// coordinates; labels index the two-letter toy alphabet.
struct GridPattern {
  enum class Kind { chessboard, stripes };
  Kind kind = Kind::chessboard;
  int n = 4;
  int block = 1;  // block size (chessboard) or stripe width (stripes)
};

// Two cluster-style labels "0" and "1" (no chemistry attached).
const AtomAlphabet& toy_alphabet();

// label(i,j) = (floor(i/block) + floor(j/block)) mod 2; block must divide n.
LabeledGraph make_chessboard(int n, int block);

// label(i,j) = floor(j/stripe_w) mod 2.
LabeledGraph make_stripes(int n, int stripe_w);

LabeledGraph make_grid(const GridPattern& pattern);

// Polarity-invariant per-node agreement: max over the global 0/1 swap.
// Topologies must match.
double pattern_accuracy(const LabeledGraph& generated, const LabeledGraph& target);

// Inverts every label (the other polarity of the same pattern).
LabeledGraph invert_labels(const LabeledGraph& grid);

// ASCII PGM (P2, maxval 1) snapshot of an n x n grid labeling.
void write_pgm(const std::string& path, const LabeledGraph& grid, int n);

}  // namespace modflow
