#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "modflow/alphabet.hpp"
#include "modflow/egnn.hpp"
#include "modflow/flow_integrals.hpp"
#include "modflow/graph.hpp"
#include "modflow/ode.hpp"
#include "modflow/rings.hpp"
#include "modflow/rng.hpp"

namespace modflow {

// Everything needed to score and sample labeled graphs: the differential's
// weights, the label alphabet (plus ring vocabulary in cluster mode), the
// solver window and the smoothing used to embed discrete labels.
struct ModFlowModel {
  AtomAlphabet alphabet;
  ClusterVocabulary vocab;  // populated only in cluster (tree) mode
  EgnnParams params;
  SolverConfig solver;
  double eps = 0.05;
  int coord_dim = 2;
  bool coord_flow = false;  // experimental: coordinates co-evolve, no density terms

  // Optimizer state, persisted so training resumes bit-exactly.
  std::vector<double> adam_m, adam_v;
  long adam_step = 0;
  long trained_epochs = 0;

  AlphabetMode mode() const { return alphabet.mode; }
  int label_dim() const { return alphabet.size(); }
};

ModFlowModel make_model(const AtomAlphabet& alphabet, const ClusterVocabulary& vocab,
                        std::uint64_t init_seed, double eps = 0.05, int coord_dim = 2,
                        const SolverConfig& solver = SolverConfig{});

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  int threads = 1;
};

struct EpochStats {
  int epoch = 0;  // 1-based, cumulative over resumed runs
  double mean_loss = 0.0;
  double nfe_mean = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&, const ModFlowModel&)>;

// Coordinates actually fed to the differential: the graph's own when the
// dimension matches, otherwise the deterministic 2D layout fallback.
std::vector<double> effective_coords(const ModFlowModel& model, const LabeledGraph& graph);

double log_likelihood(const ModFlowModel& model, const LabeledGraph& graph,
                      StepStats* stats = nullptr);

struct Encoding {
  Matrix z0;
  std::vector<double> logdet;
};

Encoding encode(const ModFlowModel& model, const LabeledGraph& graph,
                StepStats* stats = nullptr);

LabeledGraph decode(const ModFlowModel& model, const Matrix& z0,
                    const LabeledGraph& topology, StepStats* stats = nullptr);

// Labels sampled in one shot: z(0) ~ N(0,I) per node, forward flow, argmax.
// No validity correction of any kind.
LabeledGraph generate(const ModFlowModel& model, const LabeledGraph& topology, Rng& rng,
                      StepStats* stats = nullptr);

// Uniformly drawn training skeleton with labels zeroed out.
LabeledGraph sample_topology(std::span<const LabeledGraph> corpus, Rng& rng);

struct BatchResult {
  double loss = 0.0;               // -mean log-likelihood
  std::vector<double> grad;        // dloss/dparams
  double nfe_mean = 0.0;
};

BatchResult loss_batch(const ModFlowModel& model, std::span<const LabeledGraph> graphs,
                       int threads = 1);

// Standard bias-corrected Adam update on flat arrays.
void adam_step(std::span<double> params, std::span<const double> grad,
               std::span<double> m, std::span<double> v, long& step,
               const TrainConfig& cfg);

std::vector<EpochStats> train(ModFlowModel& model, std::span<const LabeledGraph> corpus,
                              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace modflow
