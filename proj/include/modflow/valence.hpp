#pragma once

#include <string>
#include <vector>

namespace modflow {

struct LabeledGraph;
struct AtomAlphabet;

// Allowed bond-order sums per element. Multivalent elements (P, S) list all
// of their admissible valence states.
class ValenceTable {
 public:
  ValenceTable() = default;

  void set(const std::string& symbol, std::vector<int> allowed);
  bool contains(const std::string& symbol) const;
  // Largest allowed valence; throws unknown_atom_symbol when absent.
  int max_allowed(const std::string& symbol) const;
  // Smallest allowed valence >= bond_sum, or -1 when the sum exceeds all of
  // them. Determines the implicit hydrogen count.
  int smallest_fitting(const std::string& symbol, int bond_sum) const;
  const std::vector<int>& allowed(const std::string& symbol) const;

  std::vector<std::string> symbols() const;

  static const ValenceTable& standard();

 private:
  std::vector<std::pair<std::string, std::vector<int>>> entries_;
};

struct ValencyReport {
  std::vector<bool> node_ok;
  bool all_ok = true;
};

// A node is valid iff its incident bond-order sum does not exceed the largest
// allowed valence of its element; remaining capacity is implicit hydrogen.
ValencyReport check_valency(const LabeledGraph& graph, const AtomAlphabet& alphabet,
                            const ValenceTable& table = ValenceTable::standard());

double atomic_weight(const std::string& symbol);

// Implicit hydrogens on one node given its bond-order sum: slack against the
// smallest admissible valence state, zero when even the largest is exceeded.
int implicit_hydrogens(const std::string& symbol, int bond_sum,
                       const ValenceTable& table = ValenceTable::standard());

}  // namespace modflow
