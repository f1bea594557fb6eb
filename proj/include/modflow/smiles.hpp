#pragma once

#include <string>
#include <vector>

#include "modflow/alphabet.hpp"
#include "modflow/graph.hpp"

namespace modflow {

// Parsed atoms/bonds before alphabet resolution.
struct SymbolGraph {
  std::vector<std::string> symbols;
  std::vector<Edge> edges;
};

// Kekulized organic-subset SMILES: atoms B C N O P S F Cl Br I (and H),
// bonds - = #, parenthesized branches, ring closures 1-9 and %nn. Aromatic
// notation, brackets, charges, stereo marks and dot-splits are rejected.
SymbolGraph parse_smiles_symbols(const std::string& text);

LabeledGraph parse_smiles(const std::string& text, const AtomAlphabet& alphabet);

// Depth-first emission from a canonical root; the result re-parses to a
// graph with the same WL hash. Requires a connected atom-mode graph.
std::string write_smiles(const LabeledGraph& graph, const AtomAlphabet& alphabet);

// Deterministic force-directed layout with unit bond length, centered at the
// origin. Used when a corpus carries no coordinates.
std::vector<double> layout_2d(const LabeledGraph& graph);

}  // namespace modflow
