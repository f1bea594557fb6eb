#pragma once

#include <cstdint>
#include <vector>

#include "modflow/linalg.hpp"

namespace modflow {

// Undirected bond between nodes a < b with integer order in {1,2,3}.
struct Edge {
  int a = 0;
  int b = 0;
  int order = 1;

  bool operator==(const Edge&) const = default;
};

// Fixed-topology labeled graph: per-node label indices into an alphabet,
// undirected integer-order edges, and optional 2D/3D coordinates.
struct LabeledGraph {
  int num_nodes = 0;
  std::vector<int> labels;
  std::vector<Edge> edges;
  int coord_dim = 0;            // 0 while no coordinates are attached
  std::vector<double> coords;   // num_nodes * coord_dim, row per node

  bool has_coords() const { return coord_dim > 0; }
  const double* coord(int i) const { return coords.data() + static_cast<std::size_t>(i) * coord_dim; }
  double* coord(int i) { return coords.data() + static_cast<std::size_t>(i) * coord_dim; }

  // Throws on self loops, duplicate edges, out-of-range indices or labels,
  // bond orders outside {1,2,3}, or inconsistent coordinate storage.
  void validate(int label_count) const;

  std::vector<std::vector<int>> adjacency() const;
  std::vector<int> degrees() const;
  bool is_connected() const;
  int bond_order_sum(int node) const;
};

Edge make_edge(int a, int b, int order);

// (1-eps) * onehot + eps/K per row; rows sum to one.
ScoreMatrix smoothed_one_hot(const LabeledGraph& graph, int label_count, double eps);

// Row-wise softmax with max subtraction; throws non_finite on bad input.
ScoreMatrix softmax_rows(const ScoreMatrix& scores);

// Per-row index of the maximum, ties resolved to the lowest index.
std::vector<int> argmax_labels(const ScoreMatrix& probs);

// Sum over nodes of log softmax(z_i)[label_i].
double log_graph_likelihood(const LabeledGraph& graph, const ScoreMatrix& scores);

// Permutation-invariant digest: iterated neighborhood refinement over
// (label, bond order) multisets, num_nodes rounds, order-independent fold.
// The plain overload seeds with label indices (same-alphabet comparisons);
// the alphabet overload seeds with label names so digests are comparable
// across corpora with different inferred alphabets.
std::uint64_t wl_hash(const LabeledGraph& graph);
struct AtomAlphabet;
std::uint64_t wl_hash(const LabeledGraph& graph, const AtomAlphabet& alphabet);

// Per-node refinement colors after num_nodes rounds; permutation-equivariant
// keys for canonical node ordering.
std::vector<std::uint64_t> wl_node_colors(const LabeledGraph& graph);

// Relabels nodes: node i of the result is node perm[i] of the input.
LabeledGraph permute_graph(const LabeledGraph& graph, const std::vector<int>& perm);

}  // namespace modflow
