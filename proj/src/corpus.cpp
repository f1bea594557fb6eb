#include "modflow/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "modflow/errors.hpp"
#include "modflow/smiles.hpp"

namespace modflow {

namespace {

AtomAlphabet infer_alphabet(const std::set<std::string>& symbols) {
  std::vector<std::string> ordered;
  for (const auto& s : canonical_element_order()) {
    if (symbols.count(s)) ordered.push_back(s);
  }
  if (ordered.size() < 2) {
    // Degenerate corpora (a single element) still need K >= 2; pad with
    // carbon or nitrogen so score matrices stay well formed.
    for (const auto& s : canonical_element_order()) {
      if (!symbols.count(s)) {
        ordered.push_back(s);
        if (ordered.size() >= 2) break;
      }
    }
    std::vector<std::string> reordered;
    for (const auto& s : canonical_element_order()) {
      for (const auto& t : ordered) {
        if (s == t) reordered.push_back(t);
      }
    }
    ordered = reordered;
  }
  return AtomAlphabet::from_symbols(ordered);
}

struct RawRecord {
  SymbolGraph graph;
  int coord_dim = 0;
  std::vector<double> coords;
};

void parse_smiles_lines(const std::string& text, std::vector<RawRecord>& records,
                        std::vector<ParseDiagnostic>& errors) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(first, last - first + 1);
    try {
      RawRecord rec;
      rec.graph = parse_smiles_symbols(body);
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      errors.push_back({line_no, e.what()});
    }
  }
}

void parse_xyz_blocks(const std::string& text, std::vector<RawRecord>& records,
                      std::vector<ParseDiagnostic>& errors) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  auto next_content_line = [&](std::string& out) -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;  // blank separates blocks
      if (line[first] == '#') continue;
      out = line;
      return true;
    }
    return false;
  };

  std::string header;
  while (next_content_line(header)) {
    const int header_line = line_no;
    try {
      std::istringstream hs(header);
      int m = 0, d = 0;
      if (!(hs >> m >> d) || m <= 0 || (d != 2 && d != 3)) {
        raise(ErrorCode::malformed_input, "expected block header 'M D' with D in {2,3}");
      }
      RawRecord rec;
      rec.coord_dim = d;
      rec.coords.resize(static_cast<std::size_t>(m) * d);
      for (int i = 0; i < m; ++i) {
        std::string atom_line;
        if (!next_content_line(atom_line)) {
          raise(ErrorCode::malformed_input, "block truncated inside atom list");
        }
        std::istringstream as(atom_line);
        std::string symbol;
        if (!(as >> symbol)) raise(ErrorCode::malformed_input, "missing atom symbol");
        for (int k = 0; k < d; ++k) {
          if (!(as >> rec.coords[static_cast<std::size_t>(i) * d + k])) {
            raise(ErrorCode::malformed_input, "missing coordinate value");
          }
        }
        rec.graph.symbols.push_back(symbol);
      }
      // Bond lines run until the blank separator or end of file.
      std::streampos mark = in.tellg();
      int mark_line = line_no;
      while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) break;  // block finished
        if (line[first] == '#') {
          mark = in.tellg();
          mark_line = line_no;
          continue;
        }
        std::istringstream bs(line);
        int a = 0, b = 0, order = 0;
        if (!(bs >> a >> b >> order)) {
          // Not a bond line; treat it as the start of the next block.
          in.seekg(mark);
          line_no = mark_line;
          break;
        }
        rec.graph.edges.push_back(make_edge(a, b, order));
        mark = in.tellg();
        mark_line = line_no;
      }
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      errors.push_back({header_line, e.what()});
      // Skip to the next blank line before resuming.
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) break;
      }
    }
  }
}

}  // namespace

Corpus parse_corpus_text(const std::string& text, CorpusFormat format,
                         const std::optional<AtomAlphabet>& alphabet) {
  std::vector<RawRecord> records;
  Corpus corpus;
  if (format == CorpusFormat::smiles_lines) {
    parse_smiles_lines(text, records, corpus.errors);
  } else {
    parse_xyz_blocks(text, records, corpus.errors);
  }

  if (alphabet.has_value()) {
    corpus.alphabet = *alphabet;
  } else {
    std::set<std::string> symbols;
    for (const auto& rec : records) {
      for (const auto& s : rec.graph.symbols) symbols.insert(s);
    }
    corpus.alphabet = infer_alphabet(symbols);
  }

  for (auto& rec : records) {
    LabeledGraph g;
    g.num_nodes = static_cast<int>(rec.graph.symbols.size());
    g.edges = std::move(rec.graph.edges);
    g.coord_dim = rec.coord_dim;
    g.coords = std::move(rec.coords);
    bool ok = true;
    for (const auto& s : rec.graph.symbols) {
      const int idx = corpus.alphabet.index_of(s);
      if (idx < 0) {
        corpus.errors.push_back({0, "atom symbol '" + s + "' not in alphabet"});
        ok = false;
        break;
      }
      g.labels.push_back(idx);
    }
    if (!ok) continue;
    try {
      g.validate(corpus.alphabet.size());
    } catch (const Error& e) {
      corpus.errors.push_back({0, e.what()});
      continue;
    }
    corpus.graphs.push_back(std::move(g));
  }
  return corpus;
}

Corpus read_corpus(const std::string& path, CorpusFormat format,
                   const std::optional<AtomAlphabet>& alphabet) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io, "cannot open corpus file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus_text(buf.str(), format, alphabet);
}

void write_smiles_file(const std::string& path, const std::vector<LabeledGraph>& graphs,
                       const AtomAlphabet& alphabet) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io, "cannot open output file '" + path + "'");
  for (const auto& g : graphs) {
    out << write_smiles(g, alphabet) << '\n';
  }
  if (!out) raise(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace modflow
