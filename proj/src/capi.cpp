#include "modflow.h"

#include <chrono>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "modflow/checkpoint.hpp"
#include "modflow/corpus.hpp"
#include "modflow/errors.hpp"
#include "modflow/metrics.hpp"
#include "modflow/model.hpp"
#include "modflow/molgen.hpp"
#include "modflow/rings.hpp"
#include "modflow/smiles.hpp"
#include "modflow/toy.hpp"

using namespace modflow;

struct mf_graph {
  LabeledGraph graph;
  AtomAlphabet alphabet;
};

struct mf_corpus {
  AtomAlphabet alphabet;
  std::vector<ParseDiagnostic> errors;
  std::vector<mf_graph> graphs;  // each carries the corpus alphabet
};

struct mf_model {
  ModFlowModel model;
  std::string config_echo;
};

struct mf_property {
  PropertyModel pm;
  mf_property_kind kind = MF_PROPERTY_MOLECULAR_WEIGHT;
};

namespace {

std::string& last_error_storage() {
  thread_local std::string message;
  return message;
}

mf_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::none: return MF_OK;
    case ErrorCode::invalid_argument: return MF_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return MF_ERR_IO;
    case ErrorCode::empty_input: return MF_ERR_EMPTY_INPUT;
    case ErrorCode::unknown_atom_symbol: return MF_ERR_UNKNOWN_ATOM_SYMBOL;
    case ErrorCode::aromatic_input_rejected: return MF_ERR_AROMATIC_INPUT_REJECTED;
    case ErrorCode::unbalanced_parentheses: return MF_ERR_UNBALANCED_PARENTHESES;
    case ErrorCode::dangling_ring_bond: return MF_ERR_DANGLING_RING_BOND;
    case ErrorCode::malformed_input: return MF_ERR_MALFORMED_INPUT;
    case ErrorCode::disconnected_graph: return MF_ERR_DISCONNECTED_GRAPH;
    case ErrorCode::ring_not_in_vocabulary: return MF_ERR_RING_NOT_IN_VOCABULARY;
    case ErrorCode::shape_mismatch: return MF_ERR_SHAPE_MISMATCH;
    case ErrorCode::non_finite: return MF_ERR_NON_FINITE;
    case ErrorCode::max_steps_exceeded: return MF_ERR_MAX_STEPS_EXCEEDED;
    case ErrorCode::step_underflow: return MF_ERR_STEP_UNDERFLOW;
    case ErrorCode::version_mismatch: return MF_ERR_VERSION_MISMATCH;
    case ErrorCode::checksum_mismatch: return MF_ERR_CHECKSUM_MISMATCH;
    case ErrorCode::rank_deficient: return MF_ERR_RANK_DEFICIENT;
    case ErrorCode::alphabet_mismatch: return MF_ERR_ALPHABET_MISMATCH;
  }
  return MF_ERR_UNKNOWN;
}

struct TrainingStopped {};

template <typename F>
mf_status guarded(F&& body) {
  try {
    body();
    last_error_storage().clear();
    return MF_OK;
  } catch (const Error& e) {
    last_error_storage() = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    last_error_storage() = e.what();
    return MF_ERR_UNKNOWN;
  }
}

void require(bool ok, const char* what) {
  if (!ok) raise(ErrorCode::invalid_argument, what);
}

// The atom labels preceding any cluster labels in the model alphabet.
AtomAlphabet atom_prefix(const AtomAlphabet& alphabet) {
  AtomAlphabet atoms;
  atoms.mode = AlphabetMode::atoms;
  for (int i = 0; i < alphabet.size(); ++i) {
    if (alphabet.max_valence[i] < 0) break;
    atoms.labels.push_back(alphabet.labels[i]);
    atoms.max_valence.push_back(alphabet.max_valence[i]);
  }
  return atoms;
}

LabeledGraph remap_labels(const LabeledGraph& g, const AtomAlphabet& from,
                          const AtomAlphabet& to) {
  if (from.labels == to.labels) return g;
  LabeledGraph out = g;
  for (int i = 0; i < g.num_nodes; ++i) {
    const int idx = to.index_of(from.labels[g.labels[i]]);
    if (idx < 0) {
      raise(ErrorCode::alphabet_mismatch,
            "label '" + from.labels[g.labels[i]] + "' unknown to the model alphabet");
    }
    out.labels[i] = idx;
  }
  return out;
}

// Corpus graphs re-expressed in the model's own label space: tree-mode models
// decompose molecules (skipping those with out-of-vocabulary rings).
std::vector<LabeledGraph> to_model_space(const ModFlowModel& model, const mf_corpus& corpus,
                                         std::int64_t* skipped) {
  const bool tree = model.vocab.size() > 0;
  const AtomAlphabet atoms = atom_prefix(model.alphabet);
  std::vector<LabeledGraph> out;
  std::int64_t skip_count = 0;
  for (const auto& entry : corpus.graphs) {
    try {
      if (tree) {
        const LabeledGraph atom_graph = remap_labels(entry.graph, entry.alphabet, atoms);
        out.push_back(tree_decompose(atom_graph, atoms, model.vocab));
      } else {
        out.push_back(remap_labels(entry.graph, entry.alphabet, model.alphabet));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ring_not_in_vocabulary) {
        ++skip_count;
        continue;
      }
      throw;
    }
  }
  if (skipped) *skipped = skip_count;
  return out;
}

LabeledGraph to_molecule_space(const ModFlowModel& model, const LabeledGraph& generated) {
  if (model.vocab.size() > 0) {
    return expand_clusters(generated, atom_prefix(model.alphabet), model.vocab);
  }
  return generated;
}

mf_corpus* corpus_from_graphs(AtomAlphabet alphabet, std::vector<LabeledGraph> graphs) {
  auto* out = new mf_corpus;
  out->alphabet = alphabet;
  out->graphs.reserve(graphs.size());
  for (auto& g : graphs) out->graphs.push_back(mf_graph{std::move(g), out->alphabet});
  return out;
}

std::vector<double> property_values(mf_property_kind kind, const ModFlowModel& model,
                                    const mf_corpus& corpus) {
  std::vector<double> values;
  values.reserve(corpus.graphs.size());
  for (const auto& entry : corpus.graphs) {
    values.push_back(property_value(static_cast<PropertyKind>(kind), entry.graph,
                                    entry.alphabet));
  }
  (void)model;
  return values;
}

}  // namespace

extern "C" {

const char* mf_version(void) { return "0.1.0"; }

const char* mf_last_error(void) { return last_error_storage().c_str(); }

/* ---- corpora ----------------------------------------------------------- */

mf_status mf_corpus_read(const char* path, mf_corpus_format format, mf_corpus** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    Corpus corpus = read_corpus(path, format == MF_FORMAT_XYZ_BLOCK
                                          ? CorpusFormat::xyz_block
                                          : CorpusFormat::smiles_lines);
    auto* handle = corpus_from_graphs(corpus.alphabet, std::move(corpus.graphs));
    handle->errors = std::move(corpus.errors);
    *out = handle;
  });
}

void mf_corpus_free(mf_corpus* corpus) { delete corpus; }

int64_t mf_corpus_size(const mf_corpus* corpus) {
  return corpus ? static_cast<int64_t>(corpus->graphs.size()) : 0;
}

const mf_graph* mf_corpus_graph(const mf_corpus* corpus, int64_t index) {
  if (!corpus || index < 0 || index >= static_cast<int64_t>(corpus->graphs.size())) {
    return nullptr;
  }
  return &corpus->graphs[static_cast<std::size_t>(index)];
}

int64_t mf_corpus_error_count(const mf_corpus* corpus) {
  return corpus ? static_cast<int64_t>(corpus->errors.size()) : 0;
}

mf_status mf_corpus_error(const mf_corpus* corpus, int64_t index, int* line,
                          const char** message) {
  return guarded([&] {
    require(corpus, "corpus must be non-null");
    require(index >= 0 && index < static_cast<int64_t>(corpus->errors.size()),
            "error index out of range");
    if (line) *line = corpus->errors[static_cast<std::size_t>(index)].line;
    if (message) *message = corpus->errors[static_cast<std::size_t>(index)].message.c_str();
  });
}

mf_status mf_corpus_write_smiles(const mf_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus and path must be non-null");
    std::vector<LabeledGraph> graphs;
    graphs.reserve(corpus->graphs.size());
    for (const auto& g : corpus->graphs) graphs.push_back(g.graph);
    write_smiles_file(path, graphs, corpus->alphabet);
  });
}

/* ---- graphs ------------------------------------------------------------ */

mf_status mf_graph_from_smiles(const char* smiles, mf_graph** out) {
  return guarded([&] {
    require(smiles && out, "smiles and out must be non-null");
    const SymbolGraph sg = parse_smiles_symbols(smiles);
    std::set<std::string> symbols(sg.symbols.begin(), sg.symbols.end());
    std::vector<std::string> ordered;
    for (const auto& s : canonical_element_order()) {
      if (symbols.count(s)) ordered.push_back(s);
    }
    while (ordered.size() < 2) {
      for (const auto& s : canonical_element_order()) {
        if (!symbols.count(s)) {
          ordered.push_back(s);
          symbols.insert(s);
          break;
        }
      }
    }
    AtomAlphabet alphabet = AtomAlphabet::from_symbols(ordered);
    auto* g = new mf_graph{parse_smiles(smiles, alphabet), std::move(alphabet)};
    *out = g;
  });
}

void mf_graph_free(mf_graph* graph) { delete graph; }

int mf_graph_num_nodes(const mf_graph* graph) { return graph ? graph->graph.num_nodes : 0; }

int mf_graph_num_edges(const mf_graph* graph) {
  return graph ? static_cast<int>(graph->graph.edges.size()) : 0;
}

mf_status mf_graph_edge(const mf_graph* graph, int index, int* a, int* b, int* order) {
  return guarded([&] {
    require(graph, "graph must be non-null");
    require(index >= 0 && index < static_cast<int>(graph->graph.edges.size()),
            "edge index out of range");
    const Edge& e = graph->graph.edges[static_cast<std::size_t>(index)];
    if (a) *a = e.a;
    if (b) *b = e.b;
    if (order) *order = e.order;
  });
}

mf_status mf_graph_label(const mf_graph* graph, int node, char* buf, size_t cap) {
  return guarded([&] {
    require(graph && buf && cap > 0, "graph and buffer must be non-null");
    require(node >= 0 && node < graph->graph.num_nodes, "node index out of range");
    const std::string& label = graph->alphabet.labels[graph->graph.labels[node]];
    std::strncpy(buf, label.c_str(), cap - 1);
    buf[cap - 1] = '\0';
  });
}

mf_status mf_graph_to_smiles(const mf_graph* graph, char* buf, size_t cap,
                             size_t* needed) {
  return guarded([&] {
    require(graph, "graph must be non-null");
    const std::string text = write_smiles(graph->graph, graph->alphabet);
    if (needed) *needed = text.size() + 1;
    require(buf && cap > text.size(), "buffer too small for the SMILES string");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

mf_status mf_graph_wl_hash(const mf_graph* graph, uint64_t* out) {
  return guarded([&] {
    require(graph && out, "graph and out must be non-null");
    *out = wl_hash(graph->graph, graph->alphabet);
  });
}

mf_status mf_graph_valid(const mf_graph* graph, int* out) {
  return guarded([&] {
    require(graph && out, "graph and out must be non-null");
    *out = check_valency(graph->graph, graph->alphabet).all_ok ? 1 : 0;
  });
}

mf_status mf_graph_molecular_weight(const mf_graph* graph, double* out) {
  return guarded([&] {
    require(graph && out, "graph and out must be non-null");
    *out = property_mw(graph->graph, graph->alphabet);
  });
}

/* ---- models ------------------------------------------------------------ */

void mf_model_options_defaults(mf_model_options* opts) {
  if (!opts) return;
  opts->tree_mode = 0;
  opts->coord_dim = 2;
  opts->eps = 0.05;
  opts->rtol = 1e-5;
  opts->atol = 1e-5;
  opts->t_final = 1.0;
  opts->init_seed = 0;
  opts->vocab_cap = 30;
  opts->coord_flow = 0;
}

void mf_train_options_defaults(mf_train_options* opts) {
  if (!opts) return;
  opts->learning_rate = 1e-3;
  opts->batch_size = 64;
  opts->epochs = 50;
  opts->seed = 0;
  opts->shuffle = 1;
  opts->threads = 1;
}

mf_status mf_model_create(const mf_corpus* corpus, const mf_model_options* opts,
                          mf_model** out) {
  return guarded([&] {
    require(corpus && opts && out, "corpus, opts and out must be non-null");
    require(!corpus->graphs.empty(), "corpus is empty");

    AtomAlphabet alphabet = corpus->alphabet;
    ClusterVocabulary vocab;
    if (opts->tree_mode) {
      require(alphabet.mode == AlphabetMode::atoms, "tree mode needs an atom corpus");
      std::vector<LabeledGraph> graphs;
      graphs.reserve(corpus->graphs.size());
      for (const auto& g : corpus->graphs) graphs.push_back(g.graph);
      vocab = extract_ring_vocabulary(graphs, alphabet, opts->vocab_cap);
      alphabet = build_tree_alphabet(alphabet, vocab);
    }
    SolverConfig solver;
    solver.rtol = opts->rtol;
    solver.atol = opts->atol;
    solver.t_start = 0.0;
    solver.t_end = opts->t_final;
    ModFlowModel model =
        make_model(alphabet, vocab, opts->init_seed, opts->eps, opts->coord_dim, solver);
    model.coord_flow = opts->coord_flow != 0;
    auto* handle = new mf_model{std::move(model), std::string()};
    *out = handle;
  });
}

void mf_model_free(mf_model* model) { delete model; }

mf_status mf_model_train(mf_model* model, const mf_corpus* corpus,
                         const mf_train_options* opts, mf_epoch_callback callback,
                         void* user, int64_t* skipped) {
  return guarded([&] {
    require(model && corpus && opts, "model, corpus and opts must be non-null");
    const std::vector<LabeledGraph> graphs = to_model_space(model->model, *corpus, skipped);
    require(!graphs.empty(), "no usable molecules in the training corpus");

    TrainConfig cfg;
    cfg.learning_rate = opts->learning_rate;
    cfg.batch_size = static_cast<int>(opts->batch_size);
    cfg.epochs = static_cast<int>(opts->epochs);
    cfg.seed = opts->seed;
    cfg.shuffle = opts->shuffle != 0;
    cfg.threads = opts->threads;

    EpochCallback on_epoch;
    if (callback) {
      on_epoch = [&](const EpochStats& stats, const ModFlowModel&) {
        if (callback(stats.epoch, stats.mean_loss, stats.nfe_mean, user) != 0) {
          throw TrainingStopped{};
        }
      };
    }
    try {
      train(model->model, graphs, cfg, on_epoch);
    } catch (const TrainingStopped&) {
      // Early stop requested through the callback; not an error.
    }
  });
}

mf_status mf_model_save(const mf_model* model, const char* path, const char* config_echo) {
  return guarded([&] {
    require(model && path, "model and path must be non-null");
    save_checkpoint(model->model, path, config_echo ? config_echo : "");
  });
}

mf_status mf_model_load(const char* path, mf_model** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    LoadedCheckpoint loaded = load_checkpoint(path);
    *out = new mf_model{std::move(loaded.model), std::move(loaded.config_echo)};
  });
}

const char* mf_model_config_echo(const mf_model* model) {
  return model ? model->config_echo.c_str() : "";
}

int mf_model_label_dim(const mf_model* model) {
  return model ? model->model.label_dim() : 0;
}

int mf_model_tree_mode(const mf_model* model) {
  return model && model->model.vocab.size() > 0 ? 1 : 0;
}

int64_t mf_model_trained_epochs(const mf_model* model) {
  return model ? model->model.trained_epochs : 0;
}

int mf_model_vocab_size(const mf_model* model) {
  return model ? model->model.vocab.size() : 0;
}

mf_status mf_model_vocab_entry(const mf_model* model, int index, char* buf, size_t cap,
                               long* count) {
  return guarded([&] {
    require(model && buf && cap > 0, "model and buffer must be non-null");
    require(index >= 0 && index < model->model.vocab.size(), "vocab index out of range");
    const std::string name = model->model.vocab.patterns[index].name();
    std::strncpy(buf, name.c_str(), cap - 1);
    buf[cap - 1] = '\0';
    if (count) *count = model->model.vocab.counts[index];
  });
}

mf_status mf_model_log_likelihood(const mf_model* model, const mf_graph* graph,
                                  double* out, long* nfe) {
  return guarded([&] {
    require(model && graph && out, "model, graph and out must be non-null");
    mf_corpus tmp;
    tmp.alphabet = graph->alphabet;
    tmp.graphs.push_back(*graph);
    const std::vector<LabeledGraph> converted = to_model_space(model->model, tmp, nullptr);
    require(!converted.empty(), "molecule cannot be expressed in the model space");
    StepStats stats;
    *out = log_likelihood(model->model, converted.front(), &stats);
    if (nfe) *nfe = stats.nfe;
  });
}

mf_status mf_model_generate(const mf_model* model, const mf_corpus* topology_source,
                            int64_t count, uint64_t seed, mf_corpus** out,
                            double* seconds_per_molecule) {
  return guarded([&] {
    require(model && topology_source && out, "model, source and out must be non-null");
    require(count >= 0, "count must be non-negative");

    const AtomAlphabet out_alphabet = model->model.vocab.size() > 0
                                          ? atom_prefix(model->model.alphabet)
                                          : model->model.alphabet;
    std::vector<LabeledGraph> skeletons;
    if (count > 0) {
      skeletons = to_model_space(model->model, *topology_source, nullptr);
      require(!skeletons.empty(), "no usable topologies in the source corpus");
    }

    Rng rng(seed);
    std::vector<LabeledGraph> generated;
    generated.reserve(static_cast<std::size_t>(count));
    const auto start = std::chrono::steady_clock::now();
    for (int64_t i = 0; i < count; ++i) {
      const LabeledGraph topo = sample_topology(skeletons, rng);
      const LabeledGraph g = generate(model->model, topo, rng);
      generated.push_back(to_molecule_space(model->model, g));
    }
    const auto stop = std::chrono::steady_clock::now();
    if (seconds_per_molecule) {
      *seconds_per_molecule =
          count > 0 ? std::chrono::duration<double>(stop - start).count() /
                          static_cast<double>(count)
                    : 0.0;
    }
    *out = corpus_from_graphs(out_alphabet, std::move(generated));
  });
}

mf_status mf_model_encode_csv(const mf_model* model, const mf_corpus* corpus,
                              const char* path) {
  return guarded([&] {
    require(model && corpus && path, "model, corpus and path must be non-null");
    const std::vector<LabeledGraph> converted = to_model_space(model->model, *corpus, nullptr);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io, std::string("cannot open '") + path + "'");
    out << "molecule,node,logdet";
    for (int c = 0; c < model->model.label_dim(); ++c) out << ",z0_" << c;
    out << '\n';
    for (std::size_t m = 0; m < converted.size(); ++m) {
      const Encoding enc = encode(model->model, converted[m]);
      for (int i = 0; i < enc.z0.rows; ++i) {
        out << m << ',' << i << ',' << format_double(enc.logdet[i]);
        for (int c = 0; c < enc.z0.cols; ++c) out << ',' << format_double(enc.z0(i, c));
        out << '\n';
      }
    }
    if (!out) raise(ErrorCode::io, std::string("failed writing '") + path + "'");
  });
}

/* ---- evaluation -------------------------------------------------------- */

mf_status mf_compute_metrics(const mf_model* model, const mf_corpus* generated,
                             const mf_corpus* training, const mf_corpus* held_out,
                             mf_metrics* out) {
  return guarded([&] {
    require(model && generated && training && out,
            "model, generated, training and out must be non-null");
    std::vector<LabeledGraph> gen_graphs;
    gen_graphs.reserve(generated->graphs.size());
    for (const auto& g : generated->graphs) gen_graphs.push_back(g.graph);

    std::vector<LabeledGraph> train_graphs;
    train_graphs.reserve(training->graphs.size());
    for (const auto& g : training->graphs) train_graphs.push_back(g.graph);

    const MetricsReport sample = compute_sample_metrics(
        gen_graphs, hash_set(train_graphs, training->alphabet), generated->alphabet);
    out->validity_pct = sample.validity_pct;
    out->uniqueness_pct = sample.uniqueness_pct;
    out->novelty_pct = sample.novelty_pct;
    out->sample_count = sample.sample_count;
    out->valid_count = sample.valid_count;
    out->empty_valid_set = sample.empty_valid_set ? 1 : 0;
    out->reconstruction_pct = 0.0;
    if (held_out) {
      const std::vector<LabeledGraph> held =
          to_model_space(model->model, *held_out, nullptr);
      out->reconstruction_pct = reconstruction_rate(model->model, held);
    }
  });
}

mf_status mf_metrics_write_csv(const char* path, const mf_metrics* metrics,
                               const char* name) {
  return guarded([&] {
    require(path && metrics, "path and metrics must be non-null");
    MetricsReport report;
    report.validity_pct = metrics->validity_pct;
    report.uniqueness_pct = metrics->uniqueness_pct;
    report.novelty_pct = metrics->novelty_pct;
    report.reconstruction_pct = metrics->reconstruction_pct;
    report.sample_count = static_cast<int>(metrics->sample_count);
    report.valid_count = static_cast<int>(metrics->valid_count);
    report.empty_valid_set = metrics->empty_valid_set != 0;
    write_metrics_csv(path, {report}, {name ? name : "run"});
  });
}

mf_status mf_write_histograms(const char* path, const mf_corpus* reference,
                              const mf_corpus* generated, int bins) {
  return guarded([&] {
    require(path && reference && generated, "path and corpora must be non-null");
    std::vector<Histogram> histograms;
    for (const PropertyKind kind :
         {PropertyKind::molecular_weight, PropertyKind::heavy_atoms, PropertyKind::rings}) {
      std::vector<double> ref_values, gen_values;
      for (const auto& g : reference->graphs) {
        ref_values.push_back(property_value(kind, g.graph, g.alphabet));
      }
      for (const auto& g : generated->graphs) {
        gen_values.push_back(property_value(kind, g.graph, g.alphabet));
      }
      histograms.push_back(
          distribution_report(property_name(kind), ref_values, gen_values, bins));
    }
    write_histograms_csv(path, histograms);
  });
}

/* ---- properties --------------------------------------------------------- */

mf_status mf_property_fit(const mf_model* model, const mf_corpus* corpus,
                          mf_property_kind kind, mf_property** out) {
  return guarded([&] {
    require(model && corpus && out, "model, corpus and out must be non-null");
    const std::vector<double> values = property_values(kind, model->model, *corpus);
    const std::vector<LabeledGraph> converted = to_model_space(model->model, *corpus, nullptr);
    require(converted.size() == values.size(),
            "tree decomposition skipped molecules; property fit needs full coverage");
    const PropertyModel pm = fit_property_regression(
        model->model, converted, values, property_name(static_cast<PropertyKind>(kind)));
    *out = new mf_property{pm, kind};
  });
}

void mf_property_free(mf_property* property) { delete property; }

double mf_property_r_squared(const mf_property* property) {
  return property ? property->pm.r_squared : 0.0;
}

mf_status mf_property_ascent(const mf_model* model, const mf_property* property,
                             const mf_graph* start, double step_length, int steps,
                             mf_corpus** decoded_out, double* predicted,
                             double* measured, int* valid) {
  return guarded([&] {
    require(model && property && start, "model, property and start must be non-null");
    require(steps >= 1, "steps must be at least 1");

    mf_corpus tmp;
    tmp.alphabet = start->alphabet;
    tmp.graphs.push_back(*start);
    const std::vector<LabeledGraph> converted = to_model_space(model->model, tmp, nullptr);
    require(!converted.empty(), "start molecule cannot be expressed in the model space");

    const AscentResult result =
        latent_ascent(model->model, converted.front(), property->pm, step_length, steps);

    const AtomAlphabet out_alphabet = model->model.vocab.size() > 0
                                          ? atom_prefix(model->model.alphabet)
                                          : model->model.alphabet;
    std::vector<LabeledGraph> decoded;
    for (int s = 0; s < steps; ++s) {
      const LabeledGraph molecule = to_molecule_space(model->model, result.steps[s].decoded);
      if (predicted) predicted[s] = result.steps[s].predicted;
      if (measured) {
        measured[s] = property_value(static_cast<PropertyKind>(property->kind), molecule,
                                     out_alphabet);
      }
      if (valid) valid[s] = check_valency(molecule, out_alphabet).all_ok ? 1 : 0;
      decoded.push_back(molecule);
    }
    if (decoded_out) {
      *decoded_out = corpus_from_graphs(out_alphabet, std::move(decoded));
    }
  });
}

/* ---- toy patterns -------------------------------------------------------- */

mf_status mf_toy_make(mf_toy_kind kind, int n, int block, mf_graph** out) {
  return guarded([&] {
    require(out, "out must be non-null");
    LabeledGraph g = kind == MF_TOY_CHESSBOARD ? make_chessboard(n, block)
                                               : make_stripes(n, block);
    *out = new mf_graph{std::move(g), toy_alphabet()};
  });
}

mf_status mf_toy_corpus(const mf_graph* pattern, mf_corpus** out) {
  return guarded([&] {
    require(pattern && out, "pattern and out must be non-null");
    std::vector<LabeledGraph> graphs = {pattern->graph, invert_labels(pattern->graph)};
    *out = corpus_from_graphs(toy_alphabet(), std::move(graphs));
  });
}

mf_status mf_toy_pattern_accuracy(const mf_graph* generated, const mf_graph* target,
                                  double* out) {
  return guarded([&] {
    require(generated && target && out, "graphs and out must be non-null");
    *out = pattern_accuracy(generated->graph, target->graph);
  });
}

mf_status mf_toy_write_pgm(const char* path, const mf_graph* grid, int n) {
  return guarded([&] {
    require(path && grid, "path and grid must be non-null");
    write_pgm(path, grid->graph, n);
  });
}

} /* extern "C" */
