#pragma once

#include <optional>
#include <string>
#include <vector>

#include "modflow/alphabet.hpp"
#include "modflow/graph.hpp"

namespace modflow {

enum class CorpusFormat { smiles_lines, xyz_block };

struct ParseDiagnostic {
  int line = 0;
  std::string message;
};

struct Corpus {
  AtomAlphabet alphabet;
  std::vector<LabeledGraph> graphs;
  std::vector<ParseDiagnostic> errors;  // per-record failures, not fatal
};

// smiles_lines: one molecule per line, '#' starts a comment line.
// xyz_block: blocks of "M D" header, M lines "symbol x [y [z]]", then bond
// lines "i j order"; blocks separated by blank lines.
// When no alphabet is given, one is inferred from the union of symbols in
// canonical element order.
Corpus read_corpus(const std::string& path, CorpusFormat format,
                   const std::optional<AtomAlphabet>& alphabet = std::nullopt);

Corpus parse_corpus_text(const std::string& text, CorpusFormat format,
                         const std::optional<AtomAlphabet>& alphabet = std::nullopt);

void write_smiles_file(const std::string& path, const std::vector<LabeledGraph>& graphs,
                       const AtomAlphabet& alphabet);

}  // namespace modflow
