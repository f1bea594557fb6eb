/* modflow C API: coupled per-node continuous normalizing flows on labeled
 * graphs, driven by an E(n)-equivariant message-passing differential.
 *
 * All functions return MF_OK (0) on success or a negative mf_status code;
 * mf_last_error() describes the most recent failure on the calling thread.
 * Objects are opaque handles released with their matching *_free function.
 * Pointers returned from accessor functions borrow from the parent handle
 * and stay valid until it is freed or mutated.
 */

#ifndef MODFLOW_H
#define MODFLOW_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mf_status {
  MF_OK = 0,
  MF_ERR_INVALID_ARGUMENT = -1,
  MF_ERR_IO = -2,
  MF_ERR_EMPTY_INPUT = -3,
  MF_ERR_UNKNOWN_ATOM_SYMBOL = -4,
  MF_ERR_AROMATIC_INPUT_REJECTED = -5,
  MF_ERR_UNBALANCED_PARENTHESES = -6,
  MF_ERR_DANGLING_RING_BOND = -7,
  MF_ERR_MALFORMED_INPUT = -8,
  MF_ERR_DISCONNECTED_GRAPH = -9,
  MF_ERR_RING_NOT_IN_VOCABULARY = -10,
  MF_ERR_SHAPE_MISMATCH = -11,
  MF_ERR_NON_FINITE = -12,
  MF_ERR_MAX_STEPS_EXCEEDED = -13,
  MF_ERR_STEP_UNDERFLOW = -14,
  MF_ERR_VERSION_MISMATCH = -15,
  MF_ERR_CHECKSUM_MISMATCH = -16,
  MF_ERR_RANK_DEFICIENT = -17,
  MF_ERR_ALPHABET_MISMATCH = -18,
  MF_ERR_UNKNOWN = -99
} mf_status;

const char* mf_version(void);
/* Message for the last failure on this thread; empty string if none. */
const char* mf_last_error(void);

typedef struct mf_graph mf_graph;
typedef struct mf_corpus mf_corpus;
typedef struct mf_model mf_model;
typedef struct mf_property mf_property;

/* ---- corpora ----------------------------------------------------------- */

typedef enum mf_corpus_format {
  MF_FORMAT_SMILES_LINES = 0,
  MF_FORMAT_XYZ_BLOCK = 1
} mf_corpus_format;

mf_status mf_corpus_read(const char* path, mf_corpus_format format, mf_corpus** out);
void mf_corpus_free(mf_corpus* corpus);
int64_t mf_corpus_size(const mf_corpus* corpus);
/* Borrowed graph handle; do not free. */
const mf_graph* mf_corpus_graph(const mf_corpus* corpus, int64_t index);
int64_t mf_corpus_error_count(const mf_corpus* corpus);
mf_status mf_corpus_error(const mf_corpus* corpus, int64_t index, int* line,
                          const char** message);
mf_status mf_corpus_write_smiles(const mf_corpus* corpus, const char* path);

/* ---- graphs ------------------------------------------------------------ */

mf_status mf_graph_from_smiles(const char* smiles, mf_graph** out);
void mf_graph_free(mf_graph* graph);
int mf_graph_num_nodes(const mf_graph* graph);
int mf_graph_num_edges(const mf_graph* graph);
mf_status mf_graph_edge(const mf_graph* graph, int index, int* a, int* b, int* order);
/* Label symbol of one node; copies at most cap bytes including the NUL. */
mf_status mf_graph_label(const mf_graph* graph, int node, char* buf, size_t cap);
mf_status mf_graph_to_smiles(const mf_graph* graph, char* buf, size_t cap,
                             size_t* needed);
mf_status mf_graph_wl_hash(const mf_graph* graph, uint64_t* out);
mf_status mf_graph_valid(const mf_graph* graph, int* out);
mf_status mf_graph_molecular_weight(const mf_graph* graph, double* out);

/* ---- models ------------------------------------------------------------ */

typedef struct mf_model_options {
  int tree_mode;      /* 0: model corpus labels directly, 1: ring-cluster trees */
  int coord_dim;      /* 2 or 3 */
  double eps;         /* label smoothing in (0,1) */
  double rtol, atol;  /* solver tolerances */
  double t_final;     /* integration horizon */
  uint64_t init_seed;
  int vocab_cap;      /* tree mode ring vocabulary size cap */
  int coord_flow;     /* experimental coordinate co-evolution */
} mf_model_options;

void mf_model_options_defaults(mf_model_options* opts);

typedef struct mf_train_options {
  double learning_rate;
  int64_t batch_size;
  int64_t epochs;
  uint64_t seed;
  int shuffle;
  int threads;
} mf_train_options;

void mf_train_options_defaults(mf_train_options* opts);

/* Builds the alphabet (and the ring vocabulary in tree mode) from the corpus. */
mf_status mf_model_create(const mf_corpus* corpus, const mf_model_options* opts,
                          mf_model** out);
void mf_model_free(mf_model* model);

/* Called after every epoch; return nonzero to stop training early. */
typedef int (*mf_epoch_callback)(int epoch, double mean_loss, double nfe_mean, void* user);

/* Tree-mode models decompose the corpus internally; molecules whose rings are
 * not in the vocabulary are skipped and counted in *skipped (may be NULL). */
mf_status mf_model_train(mf_model* model, const mf_corpus* corpus,
                         const mf_train_options* opts, mf_epoch_callback callback,
                         void* user, int64_t* skipped);

mf_status mf_model_save(const mf_model* model, const char* path, const char* config_echo);
mf_status mf_model_load(const char* path, mf_model** out);
/* Borrowed config echo stored in the checkpoint this model came from. */
const char* mf_model_config_echo(const mf_model* model);

int mf_model_label_dim(const mf_model* model);
int mf_model_tree_mode(const mf_model* model);
int64_t mf_model_trained_epochs(const mf_model* model);
int mf_model_vocab_size(const mf_model* model);
mf_status mf_model_vocab_entry(const mf_model* model, int index, char* buf, size_t cap,
                               long* count);

mf_status mf_model_log_likelihood(const mf_model* model, const mf_graph* graph,
                                  double* out, long* nfe);

/* Samples `count` molecules, drawing topologies uniformly from the corpus
 * skeletons. Tree-mode models generate cluster trees and expand them back to
 * atom graphs. No validity correction is applied. */
mf_status mf_model_generate(const mf_model* model, const mf_corpus* topology_source,
                            int64_t count, uint64_t seed, mf_corpus** out,
                            double* seconds_per_molecule);

/* Writes one row per node: molecule,node,logdet,z0_0..z0_{K-1}. */
mf_status mf_model_encode_csv(const mf_model* model, const mf_corpus* corpus,
                              const char* path);

/* ---- evaluation -------------------------------------------------------- */

typedef struct mf_metrics {
  double validity_pct;
  double uniqueness_pct;
  double novelty_pct;
  double reconstruction_pct;
  int64_t sample_count;
  int64_t valid_count;
  int empty_valid_set;
} mf_metrics;

/* held_out may be NULL to skip the reconstruction pass. */
mf_status mf_compute_metrics(const mf_model* model, const mf_corpus* generated,
                             const mf_corpus* training, const mf_corpus* held_out,
                             mf_metrics* out);
mf_status mf_metrics_write_csv(const char* path, const mf_metrics* metrics,
                               const char* name);

/* molecular weight, heavy atom count and ring count histograms. */
mf_status mf_write_histograms(const char* path, const mf_corpus* reference,
                              const mf_corpus* generated, int bins);

/* ---- property regression and latent ascent ------------------------------ */

typedef enum mf_property_kind {
  MF_PROPERTY_MOLECULAR_WEIGHT = 0,
  MF_PROPERTY_HEAVY_ATOMS = 1,
  MF_PROPERTY_RINGS = 2
} mf_property_kind;

mf_status mf_property_fit(const mf_model* model, const mf_corpus* corpus,
                          mf_property_kind kind, mf_property** out);
void mf_property_free(mf_property* property);
double mf_property_r_squared(const mf_property* property);

/* Runs `steps` ascent steps; arrays must hold `steps` entries. decoded_out
 * receives one decoded molecule per step (atom graphs in tree mode). */
mf_status mf_property_ascent(const mf_model* model, const mf_property* property,
                             const mf_graph* start, double step_length, int steps,
                             mf_corpus** decoded_out, double* predicted,
                             double* measured, int* valid);

/* ---- toy grid patterns -------------------------------------------------- */

typedef enum mf_toy_kind { MF_TOY_CHESSBOARD = 0, MF_TOY_STRIPES = 1 } mf_toy_kind;

mf_status mf_toy_make(mf_toy_kind kind, int n, int block, mf_graph** out);
/* The pattern plus its polarity inversion, ready for mf_model_create/train. */
mf_status mf_toy_corpus(const mf_graph* pattern, mf_corpus** out);
mf_status mf_toy_pattern_accuracy(const mf_graph* generated, const mf_graph* target,
                                  double* out);
mf_status mf_toy_write_pgm(const char* path, const mf_graph* grid, int n);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MODFLOW_H */
