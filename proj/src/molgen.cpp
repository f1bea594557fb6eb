#include "modflow/molgen.hpp"

#include <algorithm>
#include <deque>

#include "modflow/errors.hpp"

namespace modflow {

const AtomAlphabet& qm9_like_alphabet() {
  static const AtomAlphabet alphabet =
      AtomAlphabet::from_symbols({"C", "N", "O", "F"});
  return alphabet;
}

namespace {

std::vector<double> default_weights(const AtomAlphabet& alphabet) {
  // Carbon-dominated mix; heavier halogens appear rarely.
  std::vector<double> w(alphabet.size(), 0.05);
  for (int i = 0; i < alphabet.size(); ++i) {
    const std::string& s = alphabet.labels[i];
    if (s == "C") w[i] = 0.70;
    else if (s == "N") w[i] = 0.12;
    else if (s == "O") w[i] = 0.13;
    else if (s == "F") w[i] = 0.05;
    else if (s == "S" || s == "Cl") w[i] = 0.04;
  }
  return w;
}

int weighted_pick(Rng& rng, const std::vector<double>& w) {
  double total = 0.0;
  for (double v : w) total += v;
  double r = rng.next_double() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    r -= w[i];
    if (r <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(w.size()) - 1;
}

int graph_distance(const std::vector<std::vector<int>>& adj, int from, int to) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue = {from};
  dist[from] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (u == to) return dist[u];
    for (int v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return -1;
}

}  // namespace

LabeledGraph random_molecule(Rng& rng, const AtomAlphabet& alphabet,
                             const MolGenConfig& cfg) {
  if (alphabet.mode != AlphabetMode::atoms) {
    raise(ErrorCode::invalid_argument, "molecule sampler needs an atom alphabet");
  }
  const std::vector<double> weights =
      cfg.label_weights.empty() ? default_weights(alphabet) : cfg.label_weights;

  const int target =
      cfg.min_atoms + static_cast<int>(rng.next_below(cfg.max_atoms - cfg.min_atoms + 1));

  LabeledGraph g;
  std::vector<int> capacity;

  auto add_node = [&](int label) {
    g.labels.push_back(label);
    capacity.push_back(alphabet.max_valence[label]);
    ++g.num_nodes;
  };

  add_node(weighted_pick(rng, weights));
  for (int v = 1; v < target; ++v) {
    std::vector<int> hosts;
    for (int u = 0; u < g.num_nodes; ++u) {
      if (capacity[u] >= 1) hosts.push_back(u);
    }
    if (hosts.empty()) break;
    const int host = hosts[rng.next_below(hosts.size())];
    const int label = weighted_pick(rng, weights);
    add_node(label);
    int order = 1;
    const double roll = rng.next_double();
    if (roll < cfg.triple_bond_prob) order = 3;
    else if (roll < cfg.triple_bond_prob + cfg.double_bond_prob) order = 2;
    order = std::min({order, capacity[host], capacity[g.num_nodes - 1]});
    g.edges.push_back(make_edge(host, g.num_nodes - 1, order));
    capacity[host] -= order;
    capacity[g.num_nodes - 1] -= order;
  }

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (rng.next_double() >= cfg.ring_prob) continue;
    const auto adj = g.adjacency();
    std::vector<std::pair<int, int>> closable;
    for (int u = 0; u < g.num_nodes; ++u) {
      for (int v = u + 1; v < g.num_nodes; ++v) {
        if (capacity[u] < 1 || capacity[v] < 1) continue;
        bool adjacent = false;
        for (int w : adj[u]) {
          if (w == v) adjacent = true;
        }
        if (adjacent) continue;
        const int d = graph_distance(adj, u, v);
        if (d >= 2 && d <= 5) closable.push_back({u, v});
      }
    }
    if (closable.empty()) continue;
    const auto [u, v] = closable[rng.next_below(closable.size())];
    g.edges.push_back(make_edge(u, v, 1));
    --capacity[u];
    --capacity[v];
  }

  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& x, const Edge& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  return g;
}

std::vector<LabeledGraph> synth_corpus(std::uint64_t seed, int count,
                                       const AtomAlphabet& alphabet,
                                       const MolGenConfig& cfg) {
  std::vector<LabeledGraph> out;
  out.reserve(count);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) out.push_back(random_molecule(rng, alphabet, cfg));
  return out;
}

}  // namespace modflow
