#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "modflow/corpus.hpp"
#include "modflow/errors.hpp"
#include "modflow/molgen.hpp"
#include "modflow/smiles.hpp"
#include "modflow/valence.hpp"
#include "support/test_util.hpp"

using namespace modflow;
using namespace modflow::testing;

namespace {

const AtomAlphabet& organic() {
  static const AtomAlphabet a =
      AtomAlphabet::from_symbols({"C", "N", "O", "F", "P", "S", "Cl", "Br", "I", "B"});
  return a;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::none;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("parse simple chains and bonds") {
  const LabeledGraph g = parse_smiles("CCO", organic());
  CHECK(g.num_nodes == 3);
  CHECK(organic().labels[g.labels[0]] == "C");
  CHECK(organic().labels[g.labels[2]] == "O");
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges[0].a == 0);
  CHECK(g.edges[0].b == 1);
  CHECK(g.edges[0].order == 1);
  CHECK(g.edges[1].a == 1);
  CHECK(g.edges[1].b == 2);

  const LabeledGraph dbl = parse_smiles("C=O", organic());
  CHECK(dbl.num_nodes == 2);
  REQUIRE(dbl.edges.size() == 1);
  CHECK(dbl.edges[0].order == 2);

  const LabeledGraph trp = parse_smiles("C#N", organic());
  CHECK(trp.edges[0].order == 3);

  const LabeledGraph two_letter = parse_smiles("ClCBr", organic());
  CHECK(organic().labels[two_letter.labels[0]] == "Cl");
  CHECK(organic().labels[two_letter.labels[2]] == "Br");
}

TEST_CASE("parse ring closures") {
  const LabeledGraph ring = parse_smiles("C1CCCCC1", organic());
  CHECK(ring.num_nodes == 6);
  CHECK(ring.edges.size() == 6);
  for (const Edge& e : ring.edges) CHECK(e.order == 1);
  const std::vector<int> degrees = ring.degrees();
  for (int d : degrees) CHECK(d == 2);

  const LabeledGraph pct = parse_smiles("C%12CCCCC%12", organic());
  CHECK(wl_hash(pct) == wl_hash(ring));

  const LabeledGraph kek = parse_smiles("C1=CC=CC=C1", organic());
  int doubles = 0;
  for (const Edge& e : kek.edges) {
    if (e.order == 2) ++doubles;
  }
  CHECK(doubles == 3);
}

TEST_CASE("parser error contracts") {
  CHECK(code_of([] { parse_smiles("c1ccccc1", organic()); }) ==
        ErrorCode::aromatic_input_rejected);
  CHECK(code_of([] { parse_smiles("C:C", organic()); }) ==
        ErrorCode::aromatic_input_rejected);
  CHECK(code_of([] { parse_smiles("C(C", organic()); }) == ErrorCode::unbalanced_parentheses);
  CHECK(code_of([] { parse_smiles("CC)", organic()); }) == ErrorCode::unbalanced_parentheses);
  CHECK(code_of([] { parse_smiles("C1CC", organic()); }) == ErrorCode::dangling_ring_bond);
  CHECK(code_of([] { parse_smiles("", organic()); }) == ErrorCode::empty_input);
  CHECK(code_of([] { parse_smiles("CXC", organic()); }) == ErrorCode::unknown_atom_symbol);
  CHECK(code_of([] { parse_smiles("[CH3]", organic()); }) == ErrorCode::malformed_input);
  CHECK(code_of([] { parse_smiles("C.C", organic()); }) == ErrorCode::malformed_input);
  // H parses but is absent from this alphabet.
  CHECK(code_of([] { parse_smiles("CH", organic()); }) == ErrorCode::unknown_atom_symbol);
}

TEST_CASE("write smiles round trips") {
  const LabeledGraph chain = parse_smiles("CCO", organic());
  const std::string text = write_smiles(chain, organic());
  CHECK(wl_hash(parse_smiles(text, organic())) == wl_hash(chain));

  const LabeledGraph single = parse_smiles("N", organic());
  CHECK(write_smiles(single, organic()) == "N");

  // A six-cycle needs exactly one ring-closure digit pair.
  const LabeledGraph ring = parse_smiles("C1CCCCC1", organic());
  const std::string ring_text = write_smiles(ring, organic());
  int digits = 0;
  for (char c : ring_text) {
    if (c >= '0' && c <= '9') ++digits;
  }
  CHECK(digits == 2);
  CHECK(wl_hash(parse_smiles(ring_text, organic())) == wl_hash(ring));
}

TEST_CASE("write smiles rejects disconnected graphs") {
  LabeledGraph two;
  two.num_nodes = 2;
  two.labels = {0, 0};
  CHECK(code_of([&] { write_smiles(two, organic()); }) == ErrorCode::disconnected_graph);
}

TEST_CASE("parse-write round trip is WL identity on 200 random molecules") {
  Rng rng(2024);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const LabeledGraph g = random_molecule(rng, qm9_like_alphabet());
    const std::string text = write_smiles(g, qm9_like_alphabet());
    const LabeledGraph back = parse_smiles(text, qm9_like_alphabet());
    if (wl_hash(back) != wl_hash(g)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("valency checks") {
  const LabeledGraph methane_like = parse_smiles("C(C)(C)(C)C", organic());
  CHECK(check_valency(methane_like, organic()).all_ok);

  // Central carbon with bond-order sum 5.
  const LabeledGraph bad = parse_smiles("C=C(=C)C", organic());
  const ValencyReport r = check_valency(bad, organic());
  CHECK_FALSE(r.all_ok);
  CHECK_FALSE(r.node_ok[1]);
  CHECK(r.node_ok[0]);

  CHECK(check_valency(parse_smiles("C=O", organic()), organic()).all_ok);
  CHECK(check_valency(parse_smiles("O=S(=O)(O)O", organic()), organic()).all_ok);
}

TEST_CASE("valency is permutation invariant") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const LabeledGraph g = random_molecule(rng, qm9_like_alphabet());
    std::vector<int> perm(g.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const bool a = check_valency(g, qm9_like_alphabet()).all_ok;
    const bool b = check_valency(permute_graph(g, perm), qm9_like_alphabet()).all_ok;
    CHECK(a == b);
  }
}

TEST_CASE("implicit hydrogens use the smallest admissible valence") {
  CHECK(implicit_hydrogens("C", 0) == 4);
  CHECK(implicit_hydrogens("C", 2) == 2);
  CHECK(implicit_hydrogens("O", 2) == 0);
  CHECK(implicit_hydrogens("S", 2) == 0);
  CHECK(implicit_hydrogens("S", 3) == 1);  // next state is 4
  CHECK(implicit_hydrogens("S", 7) == 0);  // beyond every state
}

TEST_CASE("smiles-lines corpus collects per-line errors") {
  const auto path = temp_file("modflow_test_corpus.smi");
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "CCO\n";
    out << "c1ccccc1\n";
    out << "C=O\n";
    out << "\n";
    out << "CCN\n";
  }
  const Corpus corpus = read_corpus(path.string(), CorpusFormat::smiles_lines);
  CHECK(corpus.graphs.size() == 3);
  REQUIRE(corpus.errors.size() == 1);
  CHECK(corpus.errors[0].line == 3);
  std::filesystem::remove(path);
}

TEST_CASE("empty corpus file yields empty list") {
  const auto path = temp_file("modflow_test_empty.smi");
  std::ofstream(path).close();
  const Corpus corpus = read_corpus(path.string(), CorpusFormat::smiles_lines);
  CHECK(corpus.graphs.empty());
  CHECK(corpus.errors.empty());
  std::filesystem::remove(path);
}

TEST_CASE("missing corpus file raises io error") {
  CHECK(code_of([] { read_corpus("/nonexistent/nope.smi", CorpusFormat::smiles_lines); }) ==
        ErrorCode::io);
}

TEST_CASE("xyz-block corpus attaches coordinates") {
  const auto path = temp_file("modflow_test_blocks.xyz");
  {
    std::ofstream out(path);
    out << "# two molecules\n";
    out << "2 3\n";
    out << "C 0.0 0.0 0.0\n";
    out << "O 1.2 0.0 0.0\n";
    out << "0 1 2\n";
    out << "\n";
    out << "3 2\n";
    out << "C 0 0\n";
    out << "C 1.5 0\n";
    out << "N 3.0 0\n";
    out << "0 1 1\n";
    out << "1 2 1\n";
  }
  const Corpus corpus = read_corpus(path.string(), CorpusFormat::xyz_block);
  REQUIRE(corpus.graphs.size() == 2);
  CHECK(corpus.errors.empty());
  const LabeledGraph& first = corpus.graphs[0];
  CHECK(first.num_nodes == 2);
  CHECK(first.coord_dim == 3);
  CHECK(first.coord(1)[0] == doctest::Approx(1.2));
  REQUIRE(first.edges.size() == 1);
  CHECK(first.edges[0].order == 2);
  CHECK(corpus.graphs[1].coord_dim == 2);
  CHECK(corpus.graphs[1].num_nodes == 3);
  std::filesystem::remove(path);
}

TEST_CASE("alphabet inference uses canonical element order") {
  const auto path = temp_file("modflow_test_alpha.smi");
  {
    std::ofstream out(path);
    out << "OCN\nFC\n";
  }
  const Corpus corpus = read_corpus(path.string(), CorpusFormat::smiles_lines);
  CHECK(corpus.alphabet.labels == std::vector<std::string>{"C", "N", "O", "F"});
  std::filesystem::remove(path);
}

TEST_CASE("2d layout basics") {
  LabeledGraph one;
  one.num_nodes = 1;
  one.labels = {0};
  const auto p1 = layout_2d(one);
  CHECK(p1[0] == 0.0);
  CHECK(p1[1] == 0.0);

  LabeledGraph two;
  two.num_nodes = 2;
  two.labels = {0, 0};
  two.edges = {make_edge(0, 1, 1)};
  const auto p2 = layout_2d(two);
  const double dx = p2[0] - p2[2];
  const double dy = p2[1] - p2[3];
  CHECK(std::abs(std::sqrt(dx * dx + dy * dy) - 1.0) < 1e-6);
  CHECK(std::abs(p2[0] + p2[2]) < 1e-9);
  CHECK(std::abs(p2[1] + p2[3]) < 1e-9);

  LabeledGraph path3;
  path3.num_nodes = 3;
  path3.labels = {0, 0, 0};
  path3.edges = {make_edge(0, 1, 1), make_edge(1, 2, 1)};
  const auto p3 = layout_2d(path3);
  double cx = 0.0, cy = 0.0;
  for (int i = 0; i < 3; ++i) {
    cx += p3[2 * i];
    cy += p3[2 * i + 1];
  }
  CHECK(std::abs(cx) < 1e-9);
  CHECK(std::abs(cy) < 1e-9);
}

TEST_CASE("molecular corpus sanity: synthesized molecules pass valency") {
  const auto corpus = synth_corpus(17, 500, qm9_like_alphabet());
  for (const auto& g : corpus) {
    CHECK(check_valency(g, qm9_like_alphabet()).all_ok);
    CHECK(g.is_connected());
  }
}
