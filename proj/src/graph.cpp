#include "modflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "modflow/alphabet.hpp"
#include "modflow/errors.hpp"

namespace modflow {

Edge make_edge(int a, int b, int order) {
  if (a == b) raise(ErrorCode::invalid_argument, "self loop rejected");
  if (a > b) std::swap(a, b);
  return Edge{a, b, order};
}

void LabeledGraph::validate(int label_count) const {
  if (static_cast<int>(labels.size()) != num_nodes) {
    raise(ErrorCode::shape_mismatch, "label list does not match node count");
  }
  for (int l : labels) {
    if (l < 0 || l >= label_count) {
      raise(ErrorCode::invalid_argument, "label index out of alphabet range");
    }
  }
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= num_nodes || e.b >= num_nodes) {
      raise(ErrorCode::invalid_argument, "edge endpoint out of range");
    }
    if (e.a == e.b) raise(ErrorCode::invalid_argument, "self loop rejected");
    if (e.a > e.b) raise(ErrorCode::invalid_argument, "edge endpoints not normalized");
    if (e.order < 1 || e.order > 3) {
      raise(ErrorCode::invalid_argument, "bond order outside {1,2,3}");
    }
    if (!seen.insert({e.a, e.b}).second) {
      raise(ErrorCode::invalid_argument, "duplicate edge");
    }
  }
  if (coord_dim != 0) {
    if (coord_dim != 2 && coord_dim != 3) {
      raise(ErrorCode::invalid_argument, "coordinate dimension must be 2 or 3");
    }
    if (coords.size() != static_cast<std::size_t>(num_nodes) * coord_dim) {
      raise(ErrorCode::shape_mismatch, "coordinate storage does not match node count");
    }
  } else if (!coords.empty()) {
    raise(ErrorCode::shape_mismatch, "coordinates present but coord_dim is 0");
  }
}

std::vector<std::vector<int>> LabeledGraph::adjacency() const {
  std::vector<std::vector<int>> adj(num_nodes);
  for (const Edge& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& n : adj) std::sort(n.begin(), n.end());
  return adj;
}

std::vector<int> LabeledGraph::degrees() const {
  std::vector<int> deg(num_nodes, 0);
  for (const Edge& e : edges) {
    ++deg[e.a];
    ++deg[e.b];
  }
  return deg;
}

bool LabeledGraph::is_connected() const {
  if (num_nodes <= 1) return true;
  const auto adj = adjacency();
  std::vector<char> seen(num_nodes, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == num_nodes;
}

int LabeledGraph::bond_order_sum(int node) const {
  int sum = 0;
  for (const Edge& e : edges) {
    if (e.a == node || e.b == node) sum += e.order;
  }
  return sum;
}

ScoreMatrix smoothed_one_hot(const LabeledGraph& graph, int label_count, double eps) {
  if (eps < 0.0 || eps > 1.0) {
    raise(ErrorCode::invalid_argument, "eps must lie in [0,1]");
  }
  graph.validate(label_count);
  ScoreMatrix z(graph.num_nodes, label_count);
  const double off = eps / label_count;
  for (int i = 0; i < graph.num_nodes; ++i) {
    double* r = z.row(i);
    for (int k = 0; k < label_count; ++k) r[k] = off;
    r[graph.labels[i]] += 1.0 - eps;
  }
  return z;
}

ScoreMatrix softmax_rows(const ScoreMatrix& scores) {
  if (!all_finite(scores)) {
    raise(ErrorCode::non_finite, "softmax input contains non-finite entries");
  }
  ScoreMatrix out(scores.rows, scores.cols);
  for (int i = 0; i < scores.rows; ++i) {
    const double* r = scores.row(i);
    double* o = out.row(i);
    double m = r[0];
    for (int k = 1; k < scores.cols; ++k) m = std::max(m, r[k]);
    double sum = 0.0;
    for (int k = 0; k < scores.cols; ++k) {
      o[k] = std::exp(r[k] - m);
      sum += o[k];
    }
    for (int k = 0; k < scores.cols; ++k) o[k] /= sum;
  }
  return out;
}

std::vector<int> argmax_labels(const ScoreMatrix& probs) {
  std::vector<int> out(probs.rows, 0);
  for (int i = 0; i < probs.rows; ++i) {
    const double* r = probs.row(i);
    int best = 0;
    for (int k = 1; k < probs.cols; ++k) {
      if (r[k] > r[best]) best = k;  // strict: ties keep the lowest index
    }
    out[i] = best;
  }
  return out;
}

double log_graph_likelihood(const LabeledGraph& graph, const ScoreMatrix& scores) {
  if (scores.rows != graph.num_nodes) {
    raise(ErrorCode::shape_mismatch, "score rows do not match node count");
  }
  double total = 0.0;
  for (int i = 0; i < graph.num_nodes; ++i) {
    const double* r = scores.row(i);
    double m = r[0];
    for (int k = 1; k < scores.cols; ++k) m = std::max(m, r[k]);
    double sum = 0.0;
    for (int k = 0; k < scores.cols; ++k) sum += std::exp(r[k] - m);
    total += r[graph.labels[i]] - m - std::log(sum);
  }
  return total;
}

LabeledGraph permute_graph(const LabeledGraph& graph, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != graph.num_nodes) {
    raise(ErrorCode::shape_mismatch, "permutation size does not match node count");
  }
  std::vector<int> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = static_cast<int>(i);

  LabeledGraph out;
  out.num_nodes = graph.num_nodes;
  out.labels.resize(graph.num_nodes);
  out.coord_dim = graph.coord_dim;
  out.coords.resize(graph.coords.size());
  for (int i = 0; i < graph.num_nodes; ++i) {
    out.labels[i] = graph.labels[perm[i]];
    for (int d = 0; d < graph.coord_dim; ++d) {
      out.coords[static_cast<std::size_t>(i) * graph.coord_dim + d] =
          graph.coords[static_cast<std::size_t>(perm[i]) * graph.coord_dim + d];
    }
  }
  for (const Edge& e : graph.edges) {
    out.edges.push_back(make_edge(inverse[e.a], inverse[e.b], e.order));
  }
  std::sort(out.edges.begin(), out.edges.end(), [](const Edge& x, const Edge& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  return out;
}

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_pair(std::uint64_t a, std::uint64_t b) {
  return mix64(a * 0x9E3779B97F4A7C15ull + b + 0x2545F4914F6CDD1Dull);
}

}  // namespace

namespace {

std::vector<std::uint64_t> wl_refine(const LabeledGraph& graph,
                                     std::vector<std::uint64_t> color) {
  const int n = graph.num_nodes;
  std::vector<std::vector<std::pair<int, int>>> nbr(n);  // (neighbor, order)
  for (const Edge& e : graph.edges) {
    nbr[e.a].push_back({e.b, e.order});
    nbr[e.b].push_back({e.a, e.order});
  }
  std::vector<std::uint64_t> next(n);
  std::vector<std::uint64_t> bucket;
  for (int round = 0; round < n; ++round) {
    for (int i = 0; i < n; ++i) {
      bucket.clear();
      for (const auto& [j, order] : nbr[i]) {
        bucket.push_back(hash_pair(static_cast<std::uint64_t>(order), color[j]));
      }
      std::sort(bucket.begin(), bucket.end());
      std::uint64_t h = hash_pair(color[i], 0x51ED270B + bucket.size());
      for (std::uint64_t b : bucket) h = hash_pair(h, b);
      next[i] = h;
    }
    color.swap(next);
  }
  return color;
}

std::vector<std::uint64_t> label_seed_colors(const LabeledGraph& graph) {
  std::vector<std::uint64_t> color(graph.num_nodes);
  for (int i = 0; i < graph.num_nodes; ++i) {
    color[i] = mix64(0xA076D5ull + static_cast<std::uint64_t>(graph.labels[i]));
  }
  return color;
}

std::uint64_t wl_hash_seeded(const LabeledGraph& graph, std::vector<std::uint64_t> color) {
  const int n = graph.num_nodes;
  if (n == 0) return 0x7F4A7C15ull;
  color = wl_refine(graph, std::move(color));
  std::sort(color.begin(), color.end());
  std::uint64_t digest = hash_pair(0x4D4F4446ull, static_cast<std::uint64_t>(n));
  for (std::uint64_t c : color) digest = hash_pair(digest, c);
  return digest;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::uint64_t wl_hash(const LabeledGraph& graph) {
  return wl_hash_seeded(graph, label_seed_colors(graph));
}

std::vector<std::uint64_t> wl_node_colors(const LabeledGraph& graph) {
  return wl_refine(graph, label_seed_colors(graph));
}

std::uint64_t wl_hash(const LabeledGraph& graph, const AtomAlphabet& alphabet) {
  std::vector<std::uint64_t> color(graph.num_nodes);
  for (int i = 0; i < graph.num_nodes; ++i) {
    color[i] = mix64(fnv1a(alphabet.labels[graph.labels[i]]));
  }
  return wl_hash_seeded(graph, std::move(color));
}

}  // namespace modflow
