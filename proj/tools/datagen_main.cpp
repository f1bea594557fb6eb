// Generates the seeded desk-scale corpora under data/. Rerunning reproduces
// the committed files byte for byte.

#include <filesystem>
#include <iostream>
#include <string>

#include "modflow/corpus.hpp"
#include "modflow/molgen.hpp"
#include "modflow/smiles.hpp"

using namespace modflow;

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(out_dir);

  // Small-organic training corpus plus a disjoint-seed holdout.
  write_smiles_file(out_dir + "/qm9_desk.smi", synth_corpus(1001, 2000, qm9_like_alphabet()),
                    qm9_like_alphabet());
  write_smiles_file(out_dir + "/qm9_holdout.smi",
                    synth_corpus(2002, 200, qm9_like_alphabet()), qm9_like_alphabet());

  // Ring-heavy corpus for tree-mode demos.
  MolGenConfig ringy;
  ringy.min_atoms = 5;
  ringy.max_atoms = 12;
  ringy.ring_prob = 0.9;
  write_smiles_file(out_dir + "/rings_desk.smi",
                    synth_corpus(3003, 400, qm9_like_alphabet(), ringy),
                    qm9_like_alphabet());

  std::cout << "wrote qm9_desk.smi, qm9_holdout.smi, rings_desk.smi under " << out_dir
            << std::endl;
  return 0;
}
