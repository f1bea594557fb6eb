#pragma once

#include <string>
#include <vector>

#include "modflow/valence.hpp"

namespace modflow {

enum class AlphabetMode { atoms, clusters };

// Ordered label set for graph nodes. In atom mode every label is an element
// symbol with a maximum valence; cluster mode appends ring-substructure
// labels (no valence) after the atom labels.
struct AtomAlphabet {
  AlphabetMode mode = AlphabetMode::atoms;
  std::vector<std::string> labels;
  std::vector<int> max_valence;  // -1 for cluster labels

  int size() const { return static_cast<int>(labels.size()); }
  int index_of(const std::string& label) const;
  bool is_cluster_label(int index) const { return max_valence[index] < 0; }

  // Validates uniqueness, K >= 2 and the valence/mode contract.
  void validate() const;

  static AtomAlphabet from_symbols(const std::vector<std::string>& symbols,
                                   const ValenceTable& table = ValenceTable::standard());
};

// Canonical element ordering used when inferring an alphabet from a corpus,
// so label indices do not depend on molecule order.
const std::vector<std::string>& canonical_element_order();

}  // namespace modflow
