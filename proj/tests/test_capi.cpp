#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "modflow.h"

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

struct CorpusGuard {
  mf_corpus* c = nullptr;
  ~CorpusGuard() { mf_corpus_free(c); }
};

struct ModelGuard {
  mf_model* m = nullptr;
  ~ModelGuard() { mf_model_free(m); }
};

struct GraphGuard {
  mf_graph* g = nullptr;
  ~GraphGuard() { mf_graph_free(g); }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("version and error text are always available") {
  CHECK(std::strlen(mf_version()) > 0);
  CHECK(mf_last_error() != nullptr);
}

TEST_CASE("graph parsing, queries and failures through the C surface") {
  GraphGuard g;
  REQUIRE(mf_graph_from_smiles("CC(=O)N", &g.g) == MF_OK);
  CHECK(mf_graph_num_nodes(g.g) == 4);
  CHECK(mf_graph_num_edges(g.g) == 3);

  char label[8];
  REQUIRE(mf_graph_label(g.g, 2, label, sizeof(label)) == MF_OK);
  CHECK(std::string(label) == "O");

  int a = 0, b = 0, order = 0;
  REQUIRE(mf_graph_edge(g.g, 1, &a, &b, &order) == MF_OK);
  CHECK(order == 2);

  int valid = 0;
  REQUIRE(mf_graph_valid(g.g, &valid) == MF_OK);
  CHECK(valid == 1);

  double mw = 0.0;
  REQUIRE(mf_graph_molecular_weight(g.g, &mw) == MF_OK);
  CHECK(mw == doctest::Approx(59.068).epsilon(1e-6));

  char smiles[64];
  size_t needed = 0;
  REQUIRE(mf_graph_to_smiles(g.g, smiles, sizeof(smiles), &needed) == MF_OK);
  GraphGuard back;
  REQUIRE(mf_graph_from_smiles(smiles, &back.g) == MF_OK);
  uint64_t h1 = 0, h2 = 0;
  REQUIRE(mf_graph_wl_hash(g.g, &h1) == MF_OK);
  REQUIRE(mf_graph_wl_hash(back.g, &h2) == MF_OK);
  CHECK(h1 == h2);

  mf_graph* bad = nullptr;
  CHECK(mf_graph_from_smiles("c1ccccc1", &bad) == MF_ERR_AROMATIC_INPUT_REJECTED);
  CHECK(std::strlen(mf_last_error()) > 0);
  CHECK(mf_graph_from_smiles("", &bad) == MF_ERR_EMPTY_INPUT);
  CHECK(mf_graph_from_smiles(nullptr, &bad) == MF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("corpus io and diagnostics") {
  const auto path = temp_path("capi_corpus.smi");
  write_text(path, "CCO\nc1ccccc1\nCC=O\n# note\n");

  CorpusGuard corpus;
  REQUIRE(mf_corpus_read(path.string().c_str(), MF_FORMAT_SMILES_LINES, &corpus.c) == MF_OK);
  CHECK(mf_corpus_size(corpus.c) == 2);
  REQUIRE(mf_corpus_error_count(corpus.c) == 1);
  int line = 0;
  const char* message = nullptr;
  REQUIRE(mf_corpus_error(corpus.c, 0, &line, &message) == MF_OK);
  CHECK(line == 2);
  CHECK(message != nullptr);

  const mf_graph* first = mf_corpus_graph(corpus.c, 0);
  REQUIRE(first != nullptr);
  CHECK(mf_graph_num_nodes(first) == 3);
  CHECK(mf_corpus_graph(corpus.c, 99) == nullptr);

  const auto out_path = temp_path("capi_out.smi");
  REQUIRE(mf_corpus_write_smiles(corpus.c, out_path.string().c_str()) == MF_OK);
  CorpusGuard reread;
  REQUIRE(mf_corpus_read(out_path.string().c_str(), MF_FORMAT_SMILES_LINES, &reread.c) ==
          MF_OK);
  CHECK(mf_corpus_size(reread.c) == 2);

  mf_corpus* missing = nullptr;
  CHECK(mf_corpus_read("/no/such/file.smi", MF_FORMAT_SMILES_LINES, &missing) == MF_ERR_IO);

  std::filesystem::remove(path);
  std::filesystem::remove(out_path);
}

TEST_CASE("model lifecycle: create, train, save, load, generate, evaluate") {
  const auto data_path = temp_path("capi_train.smi");
  write_text(data_path,
             "CCO\nCCN\nCC=O\nCCC\nCC(C)O\nC=O\nCCF\nOCC(C)C\nNCC\nCOC\nCC#N\nCCCO\n");

  CorpusGuard corpus;
  REQUIRE(mf_corpus_read(data_path.string().c_str(), MF_FORMAT_SMILES_LINES, &corpus.c) ==
          MF_OK);

  mf_model_options opts;
  mf_model_options_defaults(&opts);
  opts.rtol = 1e-5;
  opts.atol = 1e-5;
  opts.init_seed = 11;

  ModelGuard model;
  REQUIRE(mf_model_create(corpus.c, &opts, &model.m) == MF_OK);
  CHECK(mf_model_label_dim(model.m) == 4);
  CHECK(mf_model_tree_mode(model.m) == 0);

  mf_train_options train;
  mf_train_options_defaults(&train);
  train.epochs = 1;
  train.batch_size = 6;
  train.threads = 2;
  train.seed = 3;

  struct CallbackLog {
    int calls = 0;
    double last_loss = 0.0;
  } log;
  auto cb = [](int epoch, double mean_loss, double nfe_mean, void* user) -> int {
    auto* l = static_cast<CallbackLog*>(user);
    ++l->calls;
    l->last_loss = mean_loss;
    (void)epoch;
    (void)nfe_mean;
    return 0;
  };
  int64_t skipped = -1;
  REQUIRE(mf_model_train(model.m, corpus.c, &train, cb, &log, &skipped) == MF_OK);
  CHECK(log.calls == 1);
  CHECK(skipped == 0);
  CHECK(mf_model_trained_epochs(model.m) == 1);

  const auto ckpt = temp_path("capi_model.mdfl");
  REQUIRE(mf_model_save(model.m, ckpt.string().c_str(), "demo=1") == MF_OK);
  ModelGuard loaded;
  REQUIRE(mf_model_load(ckpt.string().c_str(), &loaded.m) == MF_OK);
  CHECK(std::string(mf_model_config_echo(loaded.m)) == "demo=1");
  CHECK(mf_model_trained_epochs(loaded.m) == 1);

  double ll = 0.0;
  long nfe = 0;
  REQUIRE(mf_model_log_likelihood(loaded.m, mf_corpus_graph(corpus.c, 0), &ll, &nfe) ==
          MF_OK);
  CHECK(std::isfinite(ll));
  CHECK(nfe > 0);

  CorpusGuard generated;
  double spm = -1.0;
  REQUIRE(mf_model_generate(loaded.m, corpus.c, 25, 5, &generated.c, &spm) == MF_OK);
  CHECK(mf_corpus_size(generated.c) == 25);
  CHECK(spm >= 0.0);

  CorpusGuard empty_gen;
  REQUIRE(mf_model_generate(loaded.m, corpus.c, 0, 5, &empty_gen.c, &spm) == MF_OK);
  CHECK(mf_corpus_size(empty_gen.c) == 0);

  mf_metrics metrics;
  REQUIRE(mf_compute_metrics(loaded.m, generated.c, corpus.c, corpus.c, &metrics) == MF_OK);
  CHECK(metrics.sample_count == 25);
  CHECK(metrics.validity_pct >= 0.0);
  CHECK(metrics.reconstruction_pct == 100.0);

  const auto metrics_path = temp_path("capi_metrics.csv");
  REQUIRE(mf_metrics_write_csv(metrics_path.string().c_str(), &metrics, "capi") == MF_OK);
  const auto hist_path = temp_path("capi_hist.csv");
  REQUIRE(mf_write_histograms(hist_path.string().c_str(), corpus.c, generated.c, 10) ==
          MF_OK);

  const auto enc_path = temp_path("capi_encodings.csv");
  REQUIRE(mf_model_encode_csv(loaded.m, corpus.c, enc_path.string().c_str()) == MF_OK);
  {
    std::ifstream in(enc_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "molecule,node,logdet,z0_0,z0_1,z0_2,z0_3");
  }

  mf_property* prop = nullptr;
  REQUIRE(mf_property_fit(loaded.m, corpus.c, MF_PROPERTY_MOLECULAR_WEIGHT, &prop) == MF_OK);
  CHECK(mf_property_r_squared(prop) <= 1.0);
  std::vector<double> predicted(3), measured(3);
  std::vector<int> valid(3);
  CorpusGuard decoded;
  REQUIRE(mf_property_ascent(loaded.m, prop, mf_corpus_graph(corpus.c, 0), 0.5, 3,
                             &decoded.c, predicted.data(), measured.data(),
                             valid.data()) == MF_OK);
  CHECK(mf_corpus_size(decoded.c) == 3);
  CHECK(predicted[2] > predicted[0]);
  mf_property_free(prop);

  mf_model* broken = nullptr;
  CHECK(mf_model_load("/no/such/checkpoint.mdfl", &broken) == MF_ERR_IO);

  std::filesystem::remove(data_path);
  std::filesystem::remove(ckpt);
  std::filesystem::remove(metrics_path);
  std::filesystem::remove(hist_path);
  std::filesystem::remove(enc_path);
}

TEST_CASE("tree mode end to end through the C surface") {
  const auto data_path = temp_path("capi_rings.smi");
  // Ring-bearing corpus plus acyclic molecules.
  write_text(data_path,
             "C1CCCCC1\nCC1CCCCC1\nOC1CCCC1\nC1CCOC1\nCCO\nCCC\nC1CCCCC1O\nCC1CCCC1\n");

  CorpusGuard corpus;
  REQUIRE(mf_corpus_read(data_path.string().c_str(), MF_FORMAT_SMILES_LINES, &corpus.c) ==
          MF_OK);

  mf_model_options opts;
  mf_model_options_defaults(&opts);
  opts.tree_mode = 1;
  opts.init_seed = 21;

  ModelGuard model;
  REQUIRE(mf_model_create(corpus.c, &opts, &model.m) == MF_OK);
  CHECK(mf_model_tree_mode(model.m) == 1);
  CHECK(mf_model_vocab_size(model.m) >= 2);
  char name[128];
  long count = 0;
  REQUIRE(mf_model_vocab_entry(model.m, 0, name, sizeof(name), &count) == MF_OK);
  CHECK(count >= 1);

  mf_train_options train;
  mf_train_options_defaults(&train);
  train.epochs = 1;
  train.batch_size = 8;
  int64_t skipped = -1;
  REQUIRE(mf_model_train(model.m, corpus.c, &train, nullptr, nullptr, &skipped) == MF_OK);
  CHECK(skipped == 0);

  CorpusGuard generated;
  double spm = 0.0;
  REQUIRE(mf_model_generate(model.m, corpus.c, 10, 7, &generated.c, &spm) == MF_OK);
  CHECK(mf_corpus_size(generated.c) == 10);
  // Generated molecules are expanded back to atom graphs.
  char label[16];
  REQUIRE(mf_graph_label(mf_corpus_graph(generated.c, 0), 0, label, sizeof(label)) == MF_OK);
  CHECK(std::string(label).find("ring:") == std::string::npos);

  std::filesystem::remove(data_path);
}

TEST_CASE("toy surface") {
  GraphGuard board;
  REQUIRE(mf_toy_make(MF_TOY_CHESSBOARD, 4, 1, &board.g) == MF_OK);
  CHECK(mf_graph_num_nodes(board.g) == 16);

  GraphGuard stripes;
  REQUIRE(mf_toy_make(MF_TOY_STRIPES, 4, 2, &stripes.g) == MF_OK);

  double acc = 0.0;
  REQUIRE(mf_toy_pattern_accuracy(board.g, board.g, &acc) == MF_OK);
  CHECK(acc == 1.0);

  CorpusGuard toy;
  REQUIRE(mf_toy_corpus(board.g, &toy.c) == MF_OK);
  CHECK(mf_corpus_size(toy.c) == 2);

  mf_model_options opts;
  mf_model_options_defaults(&opts);
  ModelGuard model;
  REQUIRE(mf_model_create(toy.c, &opts, &model.m) == MF_OK);
  CHECK(mf_model_label_dim(model.m) == 2);

  mf_train_options train;
  mf_train_options_defaults(&train);
  train.epochs = 2;
  train.batch_size = 2;
  REQUIRE(mf_model_train(model.m, toy.c, &train, nullptr, nullptr, nullptr) == MF_OK);

  CorpusGuard generated;
  REQUIRE(mf_model_generate(model.m, toy.c, 4, 9, &generated.c, nullptr) == MF_OK);
  REQUIRE(mf_toy_pattern_accuracy(mf_corpus_graph(generated.c, 0), board.g, &acc) == MF_OK);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);

  const auto pgm = temp_path("capi_toy.pgm");
  REQUIRE(mf_toy_write_pgm(pgm.string().c_str(), board.g, 4) == MF_OK);
  std::filesystem::remove(pgm);

  mf_graph* bad = nullptr;
  CHECK(mf_toy_make(MF_TOY_CHESSBOARD, 4, 3, &bad) == MF_ERR_INVALID_ARGUMENT);
}
