#include "modflow/valence.hpp"

#include <algorithm>

#include "modflow/alphabet.hpp"
#include "modflow/errors.hpp"
#include "modflow/graph.hpp"

namespace modflow {

void ValenceTable::set(const std::string& symbol, std::vector<int> allowed) {
  std::sort(allowed.begin(), allowed.end());
  for (auto& e : entries_) {
    if (e.first == symbol) {
      e.second = std::move(allowed);
      return;
    }
  }
  entries_.emplace_back(symbol, std::move(allowed));
}

bool ValenceTable::contains(const std::string& symbol) const {
  for (const auto& e : entries_) {
    if (e.first == symbol) return true;
  }
  return false;
}

const std::vector<int>& ValenceTable::allowed(const std::string& symbol) const {
  for (const auto& e : entries_) {
    if (e.first == symbol) return e.second;
  }
  raise(ErrorCode::unknown_atom_symbol, "no valence entry for symbol '" + symbol + "'");
}

int ValenceTable::max_allowed(const std::string& symbol) const {
  return allowed(symbol).back();
}

int ValenceTable::smallest_fitting(const std::string& symbol, int bond_sum) const {
  for (int v : allowed(symbol)) {
    if (v >= bond_sum) return v;
  }
  return -1;
}

std::vector<std::string> ValenceTable::symbols() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

const ValenceTable& ValenceTable::standard() {
  static const ValenceTable table = [] {
    ValenceTable t;
    t.set("H", {1});
    t.set("B", {3});
    t.set("C", {4});
    t.set("N", {3});
    t.set("O", {2});
    t.set("F", {1});
    t.set("P", {3, 5});
    t.set("S", {2, 4, 6});
    t.set("Cl", {1});
    t.set("Br", {1});
    t.set("I", {1});
    return t;
  }();
  return table;
}

ValencyReport check_valency(const LabeledGraph& graph, const AtomAlphabet& alphabet,
                            const ValenceTable& table) {
  if (alphabet.mode != AlphabetMode::atoms) {
    raise(ErrorCode::invalid_argument, "check_valency requires an atom-mode graph");
  }
  ValencyReport report;
  report.node_ok.resize(graph.num_nodes, true);
  std::vector<int> sums(graph.num_nodes, 0);
  for (const Edge& e : graph.edges) {
    sums[e.a] += e.order;
    sums[e.b] += e.order;
  }
  for (int i = 0; i < graph.num_nodes; ++i) {
    const std::string& symbol = alphabet.labels[graph.labels[i]];
    const bool ok = sums[i] <= table.max_allowed(symbol);
    report.node_ok[i] = ok;
    report.all_ok = report.all_ok && ok;
  }
  return report;
}

double atomic_weight(const std::string& symbol) {
  struct Entry {
    const char* symbol;
    double weight;
  };
  static const Entry kWeights[] = {
      {"H", 1.008},  {"B", 10.81},   {"C", 12.011}, {"N", 14.007},
      {"O", 15.999}, {"F", 18.998},  {"P", 30.974}, {"S", 32.06},
      {"Cl", 35.45}, {"Br", 79.904}, {"I", 126.904},
  };
  for (const Entry& e : kWeights) {
    if (symbol == e.symbol) return e.weight;
  }
  raise(ErrorCode::unknown_atom_symbol, "no atomic weight for symbol '" + symbol + "'");
}

int implicit_hydrogens(const std::string& symbol, int bond_sum, const ValenceTable& table) {
  const int v = table.smallest_fitting(symbol, bond_sum);
  return v < 0 ? 0 : v - bond_sum;
}

}  // namespace modflow
