// modflow command line: train, generate, encode, eval, optimize and toy
// subcommands over the shared library's C API.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modflow.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(mf_status status, const std::string& what) {
  if (status != MF_OK) {
    throw RuntimeFailure(what + ": " + mf_last_error());
  }
}

// Flat key=value configuration file; '#' starts a comment line.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + " is not key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Settings shared by every subcommand, resolved from defaults, then the
// config file, then command-line flags.
struct Settings {
  std::string data, format = "smiles", out = "out", checkpoint, resume;
  std::string gen, recon, target, pattern = "chessboard", property = "mw";
  bool tree = false;
  bool coord_flow = false;
  int dim = 2;
  int epochs = 10;
  int batch = 64;
  int count = 1000;
  int bins = 20;
  int steps = 10;
  int n = 4;
  int block = 1;
  int samples = 64;
  int threads = 1;
  int vocab_cap = 30;
  int target_index = 0;
  double lr = 1e-3;
  double eps = 0.05;
  double rtol = 1e-5;
  double atol = 1e-5;
  double t_final = 1.0;
  double step_length = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;

  std::string echo() const {
    std::ostringstream s;
    s << "data=" << data << "\nformat=" << format << "\nout=" << out
      << "\ncheckpoint=" << checkpoint << "\nresume=" << resume << "\ngen=" << gen
      << "\nrecon=" << recon << "\ntarget=" << target << "\npattern=" << pattern
      << "\nproperty=" << property << "\ntree=" << (tree ? 1 : 0)
      << "\ncoord_flow=" << (coord_flow ? 1 : 0) << "\ndim=" << dim
      << "\nepochs=" << epochs << "\nbatch=" << batch << "\ncount=" << count
      << "\nbins=" << bins << "\nsteps=" << steps << "\nn=" << n << "\nblock=" << block
      << "\nsamples=" << samples << "\nthreads=" << threads
      << "\nvocab_cap=" << vocab_cap << "\ntarget_index=" << target_index
      << "\nlr=" << lr << "\neps=" << eps << "\nrtol=" << rtol << "\natol=" << atol
      << "\nt_final=" << t_final << "\nstep_length=" << step_length
      << "\nseed=" << seed << "\ninit_seed=" << init_seed << "\n";
    return s.str();
  }
};

struct CorpusHandle {
  mf_corpus* c = nullptr;
  ~CorpusHandle() { mf_corpus_free(c); }
};

struct ModelHandle {
  mf_model* m = nullptr;
  ~ModelHandle() { mf_model_free(m); }
};

struct PropertyHandle {
  mf_property* p = nullptr;
  ~PropertyHandle() { mf_property_free(p); }
};

mf_corpus_format format_of(const Settings& s) {
  if (s.format == "smiles") return MF_FORMAT_SMILES_LINES;
  if (s.format == "xyz") return MF_FORMAT_XYZ_BLOCK;
  throw UsageError("unknown corpus format '" + s.format + "' (use smiles or xyz)");
}

void load_corpus(const Settings& s, const std::string& path, CorpusHandle& corpus,
                 bool report_errors = true) {
  if (!fs::exists(path)) {
    throw UsageError("dataset path '" + path + "' does not exist");
  }
  check(mf_corpus_read(path.c_str(), format_of(s), &corpus.c), "reading '" + path + "'");
  if (report_errors && mf_corpus_error_count(corpus.c) > 0) {
    const int64_t n = mf_corpus_error_count(corpus.c);
    std::cerr << n << " record(s) skipped while reading '" << path << "':\n";
    for (int64_t i = 0; i < std::min<int64_t>(n, 10); ++i) {
      int line = 0;
      const char* message = nullptr;
      mf_corpus_error(corpus.c, i, &line, &message);
      std::cerr << "  line " << line << ": " << message << "\n";
    }
    if (n > 10) std::cerr << "  ...\n";
  }
  if (mf_corpus_size(corpus.c) == 0) {
    throw RuntimeFailure("no usable molecules in '" + path + "'");
  }
}

void write_config_echo(const Settings& s) {
  fs::create_directories(s.out);
  std::ofstream echo(fs::path(s.out) / "config.echo", std::ios::binary);
  if (!echo) throw RuntimeFailure("cannot write config echo in '" + s.out + "'");
  echo << s.echo();
}

struct EpochLogger {
  std::ofstream loss_csv;
  const mf_model* model = nullptr;
  std::string checkpoint_dir;
  std::string config_echo;

  static int callback(int epoch, double mean_loss, double nfe_mean, void* user) {
    auto* self = static_cast<EpochLogger*>(user);
    self->loss_csv << epoch << ',' << mean_loss << ',' << nfe_mean << '\n';
    self->loss_csv.flush();
    const std::string path =
        self->checkpoint_dir + "/epoch_" + std::to_string(epoch) + ".mdfl";
    if (mf_model_save(self->model, path.c_str(), self->config_echo.c_str()) != MF_OK) {
      std::cerr << "checkpoint write failed: " << mf_last_error() << "\n";
      return 1;
    }
    std::cout << "epoch " << epoch << " mean_loss " << mean_loss << " nfe_mean "
              << nfe_mean << std::endl;
    return 0;
  }
};

void train_model(const Settings& s, mf_model* model, const mf_corpus* corpus) {
  mf_train_options train;
  mf_train_options_defaults(&train);
  train.learning_rate = s.lr;
  train.batch_size = s.batch;
  train.epochs = s.epochs;
  train.seed = s.seed;
  train.threads = s.threads;

  fs::create_directories(fs::path(s.out) / "checkpoints");
  EpochLogger logger;
  const bool fresh_log = mf_model_trained_epochs(model) == 0;
  logger.loss_csv.open(fs::path(s.out) / "loss.csv",
                       fresh_log ? std::ios::trunc : std::ios::app);
  if (fresh_log) logger.loss_csv << "epoch,mean_loss,nfe_mean\n";
  logger.model = model;
  logger.checkpoint_dir = (fs::path(s.out) / "checkpoints").string();
  logger.config_echo = s.echo();

  int64_t skipped = 0;
  check(mf_model_train(model, corpus, &train, EpochLogger::callback, &logger, &skipped),
        "training");
  if (skipped > 0) {
    std::cout << skipped << " molecule(s) skipped (rings outside the vocabulary)"
              << std::endl;
  }
}

int cmd_train(const Settings& s) {
  write_config_echo(s);
  CorpusHandle corpus;
  load_corpus(s, s.data, corpus);

  ModelHandle model;
  if (!s.resume.empty()) {
    check(mf_model_load(s.resume.c_str(), &model.m), "loading '" + s.resume + "'");
  } else {
    mf_model_options opts;
    mf_model_options_defaults(&opts);
    opts.tree_mode = s.tree ? 1 : 0;
    opts.coord_dim = s.dim;
    opts.eps = s.eps;
    opts.rtol = s.rtol;
    opts.atol = s.atol;
    opts.t_final = s.t_final;
    opts.init_seed = s.init_seed;
    opts.vocab_cap = s.vocab_cap;
    opts.coord_flow = s.coord_flow ? 1 : 0;
    check(mf_model_create(corpus.c, &opts, &model.m), "building the model");
  }

  if (mf_model_tree_mode(model.m)) {
    std::ofstream vocab(fs::path(s.out) / "vocab.txt", std::ios::binary);
    char name[256];
    long count = 0;
    for (int i = 0; i < mf_model_vocab_size(model.m); ++i) {
      check(mf_model_vocab_entry(model.m, i, name, sizeof(name), &count), "vocab");
      vocab << name << '\t' << count << '\n';
    }
  }

  train_model(s, model.m, corpus.c);
  check(mf_model_save(model.m, (fs::path(s.out) / "model.mdfl").string().c_str(),
                      s.echo().c_str()),
        "saving the final checkpoint");
  return kExitOk;
}

int cmd_generate(const Settings& s) {
  write_config_echo(s);
  if (s.checkpoint.empty()) throw UsageError("--checkpoint is required");
  ModelHandle model;
  check(mf_model_load(s.checkpoint.c_str(), &model.m), "loading '" + s.checkpoint + "'");
  CorpusHandle corpus;
  load_corpus(s, s.data, corpus);

  CorpusHandle generated;
  double spm = 0.0;
  check(mf_model_generate(model.m, corpus.c, s.count, s.seed, &generated.c, &spm),
        "generation");
  check(mf_corpus_write_smiles(generated.c, (fs::path(s.out) / "generated.smi").string().c_str()),
        "writing generated.smi");
  std::cout << "generated " << s.count << " molecule(s) at " << spm
            << " s/molecule" << std::endl;

  if (s.count > 0) {
    mf_metrics metrics;
    check(mf_compute_metrics(model.m, generated.c, corpus.c, nullptr, &metrics),
          "metrics");
    check(mf_metrics_write_csv((fs::path(s.out) / "metrics.csv").string().c_str(),
                               &metrics, "generate"),
          "writing metrics.csv");
    std::cout << "validity " << metrics.validity_pct << "% uniqueness "
              << metrics.uniqueness_pct << "% novelty " << metrics.novelty_pct << "%"
              << std::endl;
  }
  return kExitOk;
}

int cmd_encode(const Settings& s) {
  write_config_echo(s);
  if (s.checkpoint.empty()) throw UsageError("--checkpoint is required");
  ModelHandle model;
  check(mf_model_load(s.checkpoint.c_str(), &model.m), "loading '" + s.checkpoint + "'");
  CorpusHandle corpus;
  load_corpus(s, s.data, corpus);
  check(mf_model_encode_csv(model.m, corpus.c,
                            (fs::path(s.out) / "encodings.csv").string().c_str()),
        "writing encodings.csv");
  std::cout << "encoded " << mf_corpus_size(corpus.c) << " molecule(s)" << std::endl;
  return kExitOk;
}

int cmd_eval(const Settings& s) {
  write_config_echo(s);
  if (s.checkpoint.empty()) throw UsageError("--checkpoint is required");
  ModelHandle model;
  check(mf_model_load(s.checkpoint.c_str(), &model.m), "loading '" + s.checkpoint + "'");
  CorpusHandle training;
  load_corpus(s, s.data, training);

  CorpusHandle generated;
  if (!s.gen.empty()) {
    load_corpus(s, s.gen, generated);
  } else {
    double spm = 0.0;
    check(mf_model_generate(model.m, training.c, s.count, s.seed, &generated.c, &spm),
          "generation");
  }

  CorpusHandle holdout;
  const mf_corpus* recon_corpus = training.c;
  if (!s.recon.empty()) {
    load_corpus(s, s.recon, holdout);
    recon_corpus = holdout.c;
  }

  mf_metrics metrics;
  check(mf_compute_metrics(model.m, generated.c, training.c, recon_corpus, &metrics),
        "metrics");
  check(mf_metrics_write_csv((fs::path(s.out) / "metrics.csv").string().c_str(), &metrics,
                             "eval"),
        "writing metrics.csv");
  check(mf_write_histograms((fs::path(s.out) / "hist.csv").string().c_str(), training.c,
                            generated.c, s.bins),
        "writing hist.csv");
  std::cout << "validity " << metrics.validity_pct << "% uniqueness "
            << metrics.uniqueness_pct << "% novelty " << metrics.novelty_pct
            << "% reconstruction " << metrics.reconstruction_pct << "%" << std::endl;
  return kExitOk;
}

int cmd_optimize(const Settings& s) {
  write_config_echo(s);
  if (s.checkpoint.empty()) throw UsageError("--checkpoint is required");
  ModelHandle model;
  check(mf_model_load(s.checkpoint.c_str(), &model.m), "loading '" + s.checkpoint + "'");
  CorpusHandle corpus;
  load_corpus(s, s.data, corpus);

  mf_property_kind kind = MF_PROPERTY_MOLECULAR_WEIGHT;
  if (s.property == "mw") kind = MF_PROPERTY_MOLECULAR_WEIGHT;
  else if (s.property == "heavy") kind = MF_PROPERTY_HEAVY_ATOMS;
  else if (s.property == "rings") kind = MF_PROPERTY_RINGS;
  else throw UsageError("unknown property '" + s.property + "' (mw, heavy or rings)");

  PropertyHandle prop;
  check(mf_property_fit(model.m, corpus.c, kind, &prop.p), "property regression");
  std::cout << "property fit R^2 " << mf_property_r_squared(prop.p) << std::endl;

  const mf_graph* start = nullptr;
  mf_graph* parsed = nullptr;
  if (!s.target.empty()) {
    check(mf_graph_from_smiles(s.target.c_str(), &parsed), "parsing --target");
    start = parsed;
  } else {
    start = mf_corpus_graph(corpus.c, s.target_index);
    if (!start) throw UsageError("--target-index out of range");
  }

  std::vector<double> predicted(s.steps), measured(s.steps);
  std::vector<int> valid(s.steps);
  CorpusHandle decoded;
  const mf_status status =
      mf_property_ascent(model.m, prop.p, start, s.step_length, s.steps, &decoded.c,
                         predicted.data(), measured.data(), valid.data());
  mf_graph_free(parsed);
  check(status, "latent ascent");

  check(mf_corpus_write_smiles(decoded.c, (fs::path(s.out) / "candidates.smi").string().c_str()),
        "writing candidates.smi");
  std::ofstream csv(fs::path(s.out) / "ascent.csv", std::ios::binary);
  csv << "step,predicted,measured,valid\n";
  for (int i = 0; i < s.steps; ++i) {
    csv << (i + 1) << ',' << predicted[i] << ',' << measured[i] << ',' << valid[i] << '\n';
  }
  std::cout << "emitted " << s.steps << " candidate(s)" << std::endl;
  return kExitOk;
}

int cmd_toy(const Settings& s) {
  write_config_echo(s);
  const mf_toy_kind kind = s.pattern == "stripes" ? MF_TOY_STRIPES : MF_TOY_CHESSBOARD;
  if (s.pattern != "stripes" && s.pattern != "chessboard") {
    throw UsageError("unknown pattern '" + s.pattern + "' (chessboard or stripes)");
  }
  mf_graph* target = nullptr;
  check(mf_toy_make(kind, s.n, s.block, &target), "building the pattern");

  CorpusHandle toy;
  check(mf_toy_corpus(target, &toy.c), "building the toy corpus");

  mf_model_options opts;
  mf_model_options_defaults(&opts);
  opts.eps = s.eps;
  opts.rtol = s.rtol;
  opts.atol = s.atol;
  opts.t_final = s.t_final;
  opts.init_seed = s.init_seed;
  ModelHandle model;
  check(mf_model_create(toy.c, &opts, &model.m), "building the model");

  train_model(s, model.m, toy.c);

  fs::create_directories(fs::path(s.out) / "toy");
  check(mf_toy_write_pgm((fs::path(s.out) / "toy" / "target.pgm").string().c_str(), target,
                         s.n),
        "writing target.pgm");

  CorpusHandle generated;
  check(mf_model_generate(model.m, toy.c, s.samples, s.seed, &generated.c, nullptr),
        "sampling");

  std::ofstream acc_csv(fs::path(s.out) / "toy" / "accuracy.csv", std::ios::binary);
  acc_csv << "sample,accuracy\n";
  double mean = 0.0, best = 0.0;
  for (int64_t i = 0; i < mf_corpus_size(generated.c); ++i) {
    double acc = 0.0;
    check(mf_toy_pattern_accuracy(mf_corpus_graph(generated.c, i), target, &acc),
          "accuracy");
    acc_csv << i << ',' << acc << '\n';
    mean += acc;
    best = std::max(best, acc);
    if (i < 4) {
      const std::string path =
          (fs::path(s.out) / "toy" / ("sample_" + std::to_string(i) + ".pgm")).string();
      check(mf_toy_write_pgm(path.c_str(), mf_corpus_graph(generated.c, i), s.n),
            "writing sample pgm");
    }
  }
  mean /= static_cast<double>(mf_corpus_size(generated.c));
  std::ofstream summary(fs::path(s.out) / "toy" / "summary.csv", std::ios::binary);
  summary << "metric,value\nmean_accuracy," << mean << "\nbest_accuracy," << best << '\n';
  std::cout << "pattern " << s.pattern << " n " << s.n << " block " << s.block
            << " mean_accuracy " << mean << " best_accuracy " << best << std::endl;
  mf_graph_free(target);
  return kExitOk;
}

void add_common(CLI::App* cmd, Settings& s, std::string& config_path) {
  cmd->add_option("--config", config_path, "flat key=value configuration file");
  cmd->add_option("--seed", s.seed, "run seed");
  cmd->add_option("--threads", s.threads, "worker threads (1 = fully sequential)");
  cmd->add_option("--out", s.out, "output directory");
}

void apply_config(const std::map<std::string, std::string>& kv, Settings& s,
                  const CLI::App& cmd) {
  auto used = [&](const std::string& flag) {
    const CLI::Option* opt = cmd.get_option_no_throw("--" + flag);
    return opt && opt->count() > 0;
  };
  for (const auto& [key, value] : kv) {
    if (used(key)) continue;  // command line wins
    std::istringstream v(value);
    if (key == "data") s.data = value;
    else if (key == "format") s.format = value;
    else if (key == "out") s.out = value;
    else if (key == "checkpoint") s.checkpoint = value;
    else if (key == "resume") s.resume = value;
    else if (key == "gen") s.gen = value;
    else if (key == "recon") s.recon = value;
    else if (key == "target") s.target = value;
    else if (key == "pattern") s.pattern = value;
    else if (key == "property") s.property = value;
    else if (key == "tree") v >> s.tree;
    else if (key == "coord_flow") v >> s.coord_flow;
    else if (key == "dim") v >> s.dim;
    else if (key == "epochs") v >> s.epochs;
    else if (key == "batch") v >> s.batch;
    else if (key == "count") v >> s.count;
    else if (key == "bins") v >> s.bins;
    else if (key == "steps") v >> s.steps;
    else if (key == "n") v >> s.n;
    else if (key == "block") v >> s.block;
    else if (key == "samples") v >> s.samples;
    else if (key == "threads") v >> s.threads;
    else if (key == "vocab_cap") v >> s.vocab_cap;
    else if (key == "target_index") v >> s.target_index;
    else if (key == "lr") v >> s.lr;
    else if (key == "eps") v >> s.eps;
    else if (key == "rtol") v >> s.rtol;
    else if (key == "atol") v >> s.atol;
    else if (key == "t_final") v >> s.t_final;
    else if (key == "step_length") v >> s.step_length;
    else if (key == "seed") v >> s.seed;
    else if (key == "init_seed") v >> s.init_seed;
    else throw UsageError("unknown config key '" + key + "'");
    if (v.fail()) throw UsageError("bad value for config key '" + key + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled per-node continuous normalizing flows on labeled graphs"};
  app.require_subcommand(1);

  Settings s;
  std::string config_path;

  CLI::App* train_cmd = app.add_subcommand("train", "fit a model to a corpus");
  add_common(train_cmd, s, config_path);
  train_cmd->add_option("--data", s.data, "training corpus path");
  train_cmd->add_option("--format", s.format, "corpus format: smiles or xyz");
  train_cmd->add_flag("--tree", s.tree, "model ring-cluster trees");
  train_cmd->add_flag("--coord-flow", s.coord_flow, "experimental coordinate co-evolution");
  train_cmd->add_option("--dim", s.dim, "coordinate dimension (2 or 3)");
  train_cmd->add_option("--epochs", s.epochs, "training epochs");
  train_cmd->add_option("--batch", s.batch, "batch size");
  train_cmd->add_option("--lr", s.lr, "learning rate");
  train_cmd->add_option("--eps", s.eps, "label smoothing");
  train_cmd->add_option("--rtol", s.rtol, "solver relative tolerance");
  train_cmd->add_option("--atol", s.atol, "solver absolute tolerance");
  train_cmd->add_option("--t-final", s.t_final, "integration horizon");
  train_cmd->add_option("--vocab-cap", s.vocab_cap, "ring vocabulary cap (tree mode)");
  train_cmd->add_option("--init-seed", s.init_seed, "weight initialization seed");
  train_cmd->add_option("--resume", s.resume, "checkpoint to continue training from");

  CLI::App* gen_cmd = app.add_subcommand("generate", "sample molecules from a checkpoint");
  add_common(gen_cmd, s, config_path);
  gen_cmd->add_option("--checkpoint", s.checkpoint, "model checkpoint");
  gen_cmd->add_option("--data", s.data, "topology source corpus");
  gen_cmd->add_option("--format", s.format, "corpus format");
  gen_cmd->add_option("--count", s.count, "number of molecules");

  CLI::App* enc_cmd = app.add_subcommand("encode", "emit base-side latents for a corpus");
  add_common(enc_cmd, s, config_path);
  enc_cmd->add_option("--checkpoint", s.checkpoint, "model checkpoint");
  enc_cmd->add_option("--data", s.data, "corpus to encode");
  enc_cmd->add_option("--format", s.format, "corpus format");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate generation quality");
  add_common(eval_cmd, s, config_path);
  eval_cmd->add_option("--checkpoint", s.checkpoint, "model checkpoint");
  eval_cmd->add_option("--data", s.data, "training corpus (novelty reference)");
  eval_cmd->add_option("--format", s.format, "corpus format");
  eval_cmd->add_option("--gen", s.gen, "generated sample to evaluate (.smi)");
  eval_cmd->add_option("--recon", s.recon, "held-out corpus for reconstruction");
  eval_cmd->add_option("--count", s.count, "sample size when --gen is absent");
  eval_cmd->add_option("--bins", s.bins, "histogram bins");

  CLI::App* opt_cmd = app.add_subcommand("optimize", "latent-space property ascent");
  add_common(opt_cmd, s, config_path);
  opt_cmd->add_option("--checkpoint", s.checkpoint, "model checkpoint");
  opt_cmd->add_option("--data", s.data, "regression corpus");
  opt_cmd->add_option("--format", s.format, "corpus format");
  opt_cmd->add_option("--property", s.property, "mw, heavy or rings");
  opt_cmd->add_option("--target", s.target, "seed molecule SMILES");
  opt_cmd->add_option("--target-index", s.target_index, "seed molecule corpus index");
  opt_cmd->add_option("--lambda,--step-length", s.step_length, "ascent step length");
  opt_cmd->add_option("--steps", s.steps, "ascent steps");

  CLI::App* toy_cmd = app.add_subcommand("toy", "grid-pattern density estimation");
  add_common(toy_cmd, s, config_path);
  toy_cmd->add_option("--pattern", s.pattern, "chessboard or stripes");
  toy_cmd->add_option("--n", s.n, "grid side length");
  toy_cmd->add_option("--block", s.block, "block size or stripe width");
  toy_cmd->add_option("--epochs", s.epochs, "training epochs");
  toy_cmd->add_option("--batch", s.batch, "batch size");
  toy_cmd->add_option("--lr", s.lr, "learning rate");
  toy_cmd->add_option("--eps", s.eps, "label smoothing");
  toy_cmd->add_option("--rtol", s.rtol, "solver relative tolerance");
  toy_cmd->add_option("--atol", s.atol, "solver absolute tolerance");
  toy_cmd->add_option("--t-final", s.t_final, "integration horizon");
  toy_cmd->add_option("--init-seed", s.init_seed, "weight initialization seed");
  toy_cmd->add_option("--samples", s.samples, "evaluation sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) {
      apply_config(read_config_file(config_path), s, *active);
    }
    const std::string name = active->get_name();
    if (name == "train") return cmd_train(s);
    if (name == "generate") return cmd_generate(s);
    if (name == "encode") return cmd_encode(s);
    if (name == "eval") return cmd_eval(s);
    if (name == "optimize") return cmd_optimize(s);
    if (name == "toy") return cmd_toy(s);
    throw UsageError("unknown subcommand");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RuntimeFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
