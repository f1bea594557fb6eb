#pragma once

#include <span>
#include <string>
#include <vector>

#include "modflow/alphabet.hpp"
#include "modflow/graph.hpp"

namespace modflow {

// Canonical ring substructure: atom symbols around the cycle plus the bond
// order between position k and k+1 (mod size). Stored in the minimal
// rotation/reflection so identical rings compare equal.
struct RingPattern {
  std::vector<std::string> symbols;
  std::vector<int> orders;

  int size() const { return static_cast<int>(symbols.size()); }
  std::string name() const;
  bool operator==(const RingPattern& other) const = default;
};

RingPattern canonical_ring(const LabeledGraph& graph, const AtomAlphabet& alphabet,
                           const std::vector<int>& cycle_nodes);

// Smallest-set-of-smallest-rings style cycle basis: shortest cycles through
// each edge, reduced to an independent set over GF(2).
std::vector<std::vector<int>> cycle_basis(const LabeledGraph& graph);

struct ClusterVocabulary {
  std::vector<RingPattern> patterns;  // descending corpus frequency
  std::vector<long> counts;

  int size() const { return static_cast<int>(patterns.size()); }
  // Index of the pattern, or -1 when absent.
  int find(const RingPattern& pattern) const;
};

ClusterVocabulary extract_ring_vocabulary(std::span<const LabeledGraph> corpus,
                                          const AtomAlphabet& alphabet, int cap = 30);

// Atom labels followed by one cluster label per vocabulary pattern.
AtomAlphabet build_tree_alphabet(const AtomAlphabet& atoms, const ClusterVocabulary& vocab);

// Contracts every basis ring into a cluster node; non-ring atoms are kept.
// Cluster coordinates are member centroids; edges touching a cluster carry
// order 1. Throws ring_not_in_vocabulary when a ring has no cluster label.
LabeledGraph tree_decompose(const LabeledGraph& graph, const AtomAlphabet& atoms,
                            const ClusterVocabulary& vocab);

// Inverse direction for generated trees: cluster nodes are replaced by their
// stored substructure, attachments distributed round-robin over ring atoms.
LabeledGraph expand_clusters(const LabeledGraph& tree, const AtomAlphabet& atoms,
                             const ClusterVocabulary& vocab);

}  // namespace modflow
