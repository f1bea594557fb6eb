#include "modflow/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <thread>

#include "modflow/errors.hpp"
#include "modflow/smiles.hpp"

namespace modflow {

ModFlowModel make_model(const AtomAlphabet& alphabet, const ClusterVocabulary& vocab,
                        std::uint64_t init_seed, double eps, int coord_dim,
                        const SolverConfig& solver) {
  alphabet.validate();
  if (eps <= 0.0 || eps >= 1.0) {
    raise(ErrorCode::invalid_argument, "eps must lie strictly inside (0,1)");
  }
  if (coord_dim != 2 && coord_dim != 3) {
    raise(ErrorCode::invalid_argument, "coordinate dimension must be 2 or 3");
  }
  ModFlowModel model;
  model.alphabet = alphabet;
  model.vocab = vocab;
  model.params = init_params(init_seed, alphabet.size());
  model.solver = solver;
  model.eps = eps;
  model.coord_dim = coord_dim;
  model.adam_m.assign(model.params.count(), 0.0);
  model.adam_v.assign(model.params.count(), 0.0);
  return model;
}

std::vector<double> effective_coords(const ModFlowModel& model, const LabeledGraph& graph) {
  if (graph.coord_dim == model.coord_dim) return graph.coords;
  if (graph.coord_dim == 0) {
    if (model.coord_dim != 2) {
      raise(ErrorCode::invalid_argument,
            "3D model requires corpus coordinates; layout fallback is 2D only");
    }
    return layout_2d(graph);
  }
  raise(ErrorCode::shape_mismatch, "graph coordinate dimension does not match the model");
}

namespace {

void check_compatible(const ModFlowModel& model, const LabeledGraph& graph) {
  try {
    graph.validate(model.alphabet.size());
  } catch (const Error& e) {
    raise(ErrorCode::alphabet_mismatch, std::string("graph incompatible with model: ") + e.what());
  }
}

LabeledGraph labeled_from_scores(const LabeledGraph& topology, const Matrix& z_end) {
  LabeledGraph out = topology;
  out.labels = argmax_labels(softmax_rows(z_end));
  return out;
}

}  // namespace

double log_likelihood(const ModFlowModel& model, const LabeledGraph& graph,
                      StepStats* stats) {
  const Encoding enc = encode(model, graph, stats);
  double total = 0.0;
  for (int i = 0; i < enc.z0.rows; ++i) {
    total += gaussian_log_density(std::span<const double>(enc.z0.row(i), enc.z0.cols));
    total += enc.logdet[i];
  }
  return total;
}

Encoding encode(const ModFlowModel& model, const LabeledGraph& graph, StepStats* stats) {
  check_compatible(model, graph);
  const std::vector<double> coords = effective_coords(model, graph);
  const GraphContext ctx(graph, coords, model.coord_dim);
  const EgnnDifferential diff(model.params, ctx);
  const ScoreMatrix z_end = smoothed_one_hot(graph, model.alphabet.size(), model.eps);
  AugmentedState state = integrate_reverse_logdet(diff, z_end, model.solver, stats);
  return Encoding{std::move(state.z), std::move(state.logdet)};
}

LabeledGraph decode(const ModFlowModel& model, const Matrix& z0,
                    const LabeledGraph& topology, StepStats* stats) {
  const std::vector<double> coords = effective_coords(model, topology);
  const GraphContext ctx(topology, coords, model.coord_dim);
  const EgnnDifferential diff(model.params, ctx);
  const Matrix z_end =
      integrate_states(diff, z0, model.solver.t_start, model.solver.t_end, model.solver, stats);
  return labeled_from_scores(topology, z_end);
}

namespace {

// Coordinate co-evolution: state is [z | x], no density terms.
Matrix integrate_with_coord_flow(const ModFlowModel& model, const EgnnDifferential& diff,
                                 const Matrix& z0, const Matrix& x0, StepStats* stats) {
  const std::size_t zn = z0.a.size();
  const std::size_t xn = x0.a.size();
  Matrix z_work = z0, x_work = x0, dz(z0.rows, z0.cols), dx(x0.rows, x0.cols);
  std::vector<double> y(zn + xn);
  std::memcpy(y.data(), z0.a.data(), sizeof(double) * zn);
  std::memcpy(y.data() + zn, x0.a.data(), sizeof(double) * xn);
  OdeRhs rhs = [&](double t, std::span<const double> state, std::span<double> dstate) {
    std::memcpy(z_work.a.data(), state.data(), sizeof(double) * zn);
    std::memcpy(x_work.a.data(), state.data() + zn, sizeof(double) * xn);
    diff.eval_with_coords(t, z_work, x_work, dz, dx);
    std::memcpy(dstate.data(), dz.a.data(), sizeof(double) * zn);
    std::memcpy(dstate.data() + zn, dx.a.data(), sizeof(double) * xn);
  };
  std::vector<double> state = y;
  dopri5_integrate(rhs, state, model.solver, stats);
  Matrix out(z0.rows, z0.cols);
  std::memcpy(out.a.data(), state.data(), sizeof(double) * zn);
  return out;
}

}  // namespace

LabeledGraph generate(const ModFlowModel& model, const LabeledGraph& topology, Rng& rng,
                      StepStats* stats) {
  const int k = model.alphabet.size();
  Matrix z0(topology.num_nodes, k);
  for (int i = 0; i < topology.num_nodes; ++i) {
    for (int c = 0; c < k; ++c) z0(i, c) = rng.gaussian();
  }
  const std::vector<double> coords = effective_coords(model, topology);
  const GraphContext ctx(topology, coords, model.coord_dim);
  const EgnnDifferential diff(model.params, ctx);
  Matrix z_end;
  if (model.coord_flow) {
    Matrix x0(topology.num_nodes, model.coord_dim);
    std::memcpy(x0.a.data(), coords.data(), sizeof(double) * coords.size());
    z_end = integrate_with_coord_flow(model, diff, z0, x0, stats);
  } else {
    z_end = integrate_states(diff, z0, model.solver.t_start, model.solver.t_end,
                             model.solver, stats);
  }
  return labeled_from_scores(topology, z_end);
}

LabeledGraph sample_topology(std::span<const LabeledGraph> corpus, Rng& rng) {
  if (corpus.empty()) raise(ErrorCode::empty_input, "cannot sample from an empty corpus");
  const std::size_t pick = static_cast<std::size_t>(rng.next_below(corpus.size()));
  LabeledGraph topo = corpus[pick];
  std::fill(topo.labels.begin(), topo.labels.end(), 0);
  return topo;
}

namespace {

struct MoleculeGrad {
  double loss = 0.0;
  std::vector<double> grad;
  long nfe = 0;
};

MoleculeGrad molecule_loss_gradient(const ModFlowModel& model, const LabeledGraph& graph) {
  StepStats stats;
  const std::vector<double> coords = effective_coords(model, graph);
  const GraphContext ctx(graph, coords, model.coord_dim);
  const EgnnDifferential diff(model.params, ctx);
  const ScoreMatrix z_end = smoothed_one_hot(graph, model.alphabet.size(), model.eps);
  const AugmentedState enc = integrate_reverse_logdet(diff, z_end, model.solver, &stats);

  double loglik = 0.0;
  Matrix dloss_dz(enc.z.rows, enc.z.cols);
  std::vector<double> dloss_dlogdet(enc.z.rows, -1.0);
  for (int i = 0; i < enc.z.rows; ++i) {
    loglik += gaussian_log_density(std::span<const double>(enc.z.row(i), enc.z.cols));
    loglik += enc.logdet[i];
    // loss = -loglik, so dloss/dz0 = +z0 row-wise under the unit Gaussian.
    for (int c = 0; c < enc.z.cols; ++c) dloss_dz(i, c) = enc.z(i, c);
  }

  const AdjointResult adj =
      adjoint_gradient(diff, enc.z, model.solver.t_end, model.solver.t_start, dloss_dz,
                       dloss_dlogdet, model.solver, &stats);

  MoleculeGrad out;
  out.loss = -loglik;
  out.grad = adj.grad_params;
  out.nfe = stats.nfe;
  return out;
}

}  // namespace

BatchResult loss_batch(const ModFlowModel& model, std::span<const LabeledGraph> graphs,
                       int threads) {
  if (graphs.empty()) raise(ErrorCode::empty_input, "empty batch");
  const std::size_t n = graphs.size();
  std::vector<MoleculeGrad> per(n);

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) per[i] = molecule_loss_gradient(model, graphs[i]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          per[i] = molecule_loss_gradient(model, graphs[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Fixed summation order keeps results identical for any thread count.
  BatchResult out;
  out.grad.assign(model.params.count(), 0.0);
  long nfe_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.loss += per[i].loss;
    nfe_total += per[i].nfe;
    for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += per[i].grad[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  out.nfe_mean = static_cast<double>(nfe_total) * inv;
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grad,
               std::span<double> m, std::span<double> v, long& step,
               const TrainConfig& cfg) {
  if (params.size() != grad.size() || params.size() != m.size() ||
      params.size() != v.size()) {
    raise(ErrorCode::shape_mismatch, "adam buffers disagree in size");
  }
  ++step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

std::vector<EpochStats> train(ModFlowModel& model, std::span<const LabeledGraph> corpus,
                              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (corpus.empty()) raise(ErrorCode::empty_input, "training corpus is empty");
  if (cfg.batch_size < 1 || cfg.epochs < 0 || !(cfg.learning_rate >= 0.0)) {
    raise(ErrorCode::invalid_argument, "invalid training configuration");
  }
  for (const auto& g : corpus) g.validate(model.alphabet.size());

  std::vector<EpochStats> history;
  for (int e = 0; e < cfg.epochs; ++e) {
    const long epoch_index = model.trained_epochs + 1;
    // Fresh identity permutation, seeded per epoch: a resumed run replays
    // exactly the batch sequence an uninterrupted run would have used.
    std::vector<int> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    if (cfg.shuffle) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch_index)));
      rng.shuffle(order);
    }
    double loss_sum = 0.0;
    double nfe_sum = 0.0;
    std::size_t seen = 0;
    std::vector<LabeledGraph> batch;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), at + cfg.batch_size);
      batch.assign(stop - at, LabeledGraph{});
      for (std::size_t i = at; i < stop; ++i) batch[i - at] = corpus[order[i]];
      const BatchResult r = loss_batch(model, batch, cfg.threads);
      adam_step(model.params.values, r.grad, model.adam_m, model.adam_v, model.adam_step,
                cfg);
      loss_sum += r.loss * static_cast<double>(batch.size());
      nfe_sum += r.nfe_mean * static_cast<double>(batch.size());
      seen += batch.size();
    }
    model.trained_epochs = epoch_index;
    EpochStats stats;
    stats.epoch = static_cast<int>(epoch_index);
    stats.mean_loss = loss_sum / static_cast<double>(seen);
    stats.nfe_mean = nfe_sum / static_cast<double>(seen);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats, model);
  }
  return history;
}

}  // namespace modflow
