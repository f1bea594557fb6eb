#include "modflow/alphabet.hpp"

#include <set>

#include "modflow/errors.hpp"

namespace modflow {

int AtomAlphabet::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i) {
    if (labels[i] == label) return i;
  }
  return -1;
}

void AtomAlphabet::validate() const {
  if (size() < 2) {
    raise(ErrorCode::invalid_argument, "alphabet needs at least 2 labels");
  }
  if (max_valence.size() != labels.size()) {
    raise(ErrorCode::invalid_argument, "alphabet valence list does not match labels");
  }
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      raise(ErrorCode::invalid_argument, "duplicate alphabet label '" + l + "'");
    }
  }
  for (int i = 0; i < size(); ++i) {
    if (mode == AlphabetMode::atoms && max_valence[i] < 0) {
      raise(ErrorCode::invalid_argument,
            "atom-mode label '" + labels[i] + "' has no valence entry");
    }
  }
}

AtomAlphabet AtomAlphabet::from_symbols(const std::vector<std::string>& symbols,
                                        const ValenceTable& table) {
  AtomAlphabet a;
  a.mode = AlphabetMode::atoms;
  for (const auto& s : symbols) {
    a.labels.push_back(s);
    a.max_valence.push_back(table.max_allowed(s));
  }
  a.validate();
  return a;
}

const std::vector<std::string>& canonical_element_order() {
  static const std::vector<std::string> order = {"C", "N", "O",  "F", "P", "S",
                                                 "Cl", "Br", "I", "B", "H"};
  return order;
}

}  // namespace modflow
