#pragma once

#include <cstdint>
#include <vector>

#include "modflow/alphabet.hpp"
#include "modflow/graph.hpp"
#include "modflow/rng.hpp"

namespace modflow {

// Seeded sampler of small valence-correct molecular graphs, used to build
// the desk-scale training corpora that stand in for the public benchmark
// sets. Molecules are grown as random trees under per-element valence
// budgets, with occasional short ring closures.
struct MolGenConfig {
  int min_atoms = 3;
  int max_atoms = 9;
  double double_bond_prob = 0.18;
  double triple_bond_prob = 0.03;
  double ring_prob = 0.4;  // chance of attempting each of up to two closures
  std::vector<double> label_weights;  // defaults to a carbon-heavy mix
};

LabeledGraph random_molecule(Rng& rng, const AtomAlphabet& alphabet,
                             const MolGenConfig& cfg = MolGenConfig{});

std::vector<LabeledGraph> synth_corpus(std::uint64_t seed, int count,
                                       const AtomAlphabet& alphabet,
                                       const MolGenConfig& cfg = MolGenConfig{});

// C/N/O/F alphabet matching the small-organic benchmark composition.
const AtomAlphabet& qm9_like_alphabet();

}  // namespace modflow
