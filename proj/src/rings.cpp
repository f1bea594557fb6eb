#include "modflow/rings.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "modflow/errors.hpp"

namespace modflow {

std::string RingPattern::name() const {
  std::string n;
  for (const auto& s : symbols) n += s;
  n += ';';
  for (int o : orders) n += static_cast<char>('0' + o);
  return n;
}

RingPattern canonical_ring(const LabeledGraph& graph, const AtomAlphabet& alphabet,
                           const std::vector<int>& cycle_nodes) {
  const int n = static_cast<int>(cycle_nodes.size());
  if (n < 3) raise(ErrorCode::invalid_argument, "a ring needs at least 3 atoms");

  std::map<std::pair<int, int>, int> order_of;
  for (const Edge& e : graph.edges) order_of[{e.a, e.b}] = e.order;
  auto bond = [&](int u, int v) {
    auto it = order_of.find({std::min(u, v), std::max(u, v)});
    if (it == order_of.end()) {
      raise(ErrorCode::invalid_argument, "cycle nodes are not consecutively bonded");
    }
    return it->second;
  };

  RingPattern best;
  auto consider = [&](const std::vector<int>& seq) {
    RingPattern p;
    p.symbols.reserve(n);
    p.orders.reserve(n);
    for (int k = 0; k < n; ++k) {
      p.symbols.push_back(alphabet.labels[graph.labels[seq[k]]]);
      p.orders.push_back(bond(seq[k], seq[(k + 1) % n]));
    }
    if (best.symbols.empty() || p.name() < best.name()) best = std::move(p);
  };

  std::vector<int> seq(cycle_nodes);
  for (int rot = 0; rot < n; ++rot) {
    consider(seq);
    std::rotate(seq.begin(), seq.begin() + 1, seq.end());
  }
  std::reverse(seq.begin(), seq.end());
  for (int rot = 0; rot < n; ++rot) {
    consider(seq);
    std::rotate(seq.begin(), seq.begin() + 1, seq.end());
  }
  return best;
}

namespace {

// Shortest path avoiding one edge, used to find the smallest cycle through it.
std::vector<int> bfs_path_avoiding(const std::vector<std::vector<int>>& adj, int from,
                                   int to, int avoid_a, int avoid_b) {
  std::vector<int> parent(adj.size(), -2);
  std::deque<int> queue = {from};
  parent[from] = -1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (u == to) break;
    for (int v : adj[u]) {
      if ((u == avoid_a && v == avoid_b) || (u == avoid_b && v == avoid_a)) continue;
      if (parent[v] == -2) {
        parent[v] = u;
        queue.push_back(v);
      }
    }
  }
  if (parent[to] == -2) return {};
  std::vector<int> path;
  for (int u = to; u != -1; u = parent[u]) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

std::vector<std::vector<int>> cycle_basis(const LabeledGraph& graph) {
  const int n = graph.num_nodes;
  const int m = static_cast<int>(graph.edges.size());
  if (m == 0 || n == 0) return {};

  const auto adj = graph.adjacency();

  // Component count for the basis rank m - n + c.
  int components = 0;
  {
    std::vector<char> seen(n, 0);
    for (int s = 0; s < n; ++s) {
      if (seen[s]) continue;
      ++components;
      std::vector<int> stack = {s};
      seen[s] = 1;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[u]) {
          if (!seen[v]) {
            seen[v] = 1;
            stack.push_back(v);
          }
        }
      }
    }
  }
  const int rank = m - n + components;
  if (rank <= 0) return {};

  std::map<std::pair<int, int>, int> edge_index;
  for (int e = 0; e < m; ++e) edge_index[{graph.edges[e].a, graph.edges[e].b}] = e;

  struct Candidate {
    std::vector<int> nodes;
    std::vector<std::uint64_t> edge_bits;
  };
  const int words = (m + 63) / 64;

  auto to_bits = [&](const std::vector<int>& cycle) {
    std::vector<std::uint64_t> bits(words, 0);
    const int len = static_cast<int>(cycle.size());
    for (int k = 0; k < len; ++k) {
      const int u = cycle[k];
      const int v = cycle[(k + 1) % len];
      const int e = edge_index.at({std::min(u, v), std::max(u, v)});
      bits[e / 64] ^= (1ull << (e % 64));
    }
    return bits;
  };

  std::vector<Candidate> candidates;
  std::set<std::vector<int>> dedup;
  for (const Edge& e : graph.edges) {
    auto path = bfs_path_avoiding(adj, e.a, e.b, e.a, e.b);
    if (path.empty()) continue;  // bridge
    std::vector<int> sorted_nodes(path);
    std::sort(sorted_nodes.begin(), sorted_nodes.end());
    if (!dedup.insert(sorted_nodes).second) continue;
    auto bits = to_bits(path);
    candidates.push_back({std::move(path), std::move(bits)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.nodes.size() != y.nodes.size()) return x.nodes.size() < y.nodes.size();
    return x.nodes < y.nodes;
  });

  // Greedy GF(2) independence over edge space, smallest cycles first.
  std::vector<std::vector<std::uint64_t>> reduced;  // row-echelon pivots
  std::vector<int> pivots;
  std::vector<std::vector<int>> basis;
  for (auto& cand : candidates) {
    std::vector<std::uint64_t> v = cand.edge_bits;
    for (std::size_t r = 0; r < reduced.size(); ++r) {
      const int p = pivots[r];
      if (v[p / 64] & (1ull << (p % 64))) {
        for (int w = 0; w < words; ++w) v[w] ^= reduced[r][w];
      }
    }
    int pivot = -1;
    for (int e = 0; e < m && pivot < 0; ++e) {
      if (v[e / 64] & (1ull << (e % 64))) pivot = e;
    }
    if (pivot < 0) continue;  // dependent
    reduced.push_back(std::move(v));
    pivots.push_back(pivot);
    basis.push_back(std::move(cand.nodes));
    if (static_cast<int>(basis.size()) == rank) break;
  }
  return basis;
}

int ClusterVocabulary::find(const RingPattern& pattern) const {
  for (int i = 0; i < size(); ++i) {
    if (patterns[i] == pattern) return i;
  }
  return -1;
}

ClusterVocabulary extract_ring_vocabulary(std::span<const LabeledGraph> corpus,
                                          const AtomAlphabet& alphabet, int cap) {
  if (cap < 1) raise(ErrorCode::invalid_argument, "vocabulary cap must be at least 1");
  std::map<std::string, std::pair<RingPattern, long>> counts;
  for (const auto& g : corpus) {
    for (const auto& cycle : cycle_basis(g)) {
      RingPattern p = canonical_ring(g, alphabet, cycle);
      auto [it, inserted] = counts.try_emplace(p.name(), std::pair{p, 0L});
      ++it->second.second;
    }
  }
  std::vector<std::pair<RingPattern, long>> ordered;
  ordered.reserve(counts.size());
  for (auto& [name, pc] : counts) ordered.push_back(std::move(pc));
  std::sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first.name() < y.first.name();
  });
  if (static_cast<int>(ordered.size()) > cap) ordered.resize(cap);

  ClusterVocabulary vocab;
  for (auto& [pattern, count] : ordered) {
    vocab.patterns.push_back(std::move(pattern));
    vocab.counts.push_back(count);
  }
  return vocab;
}

AtomAlphabet build_tree_alphabet(const AtomAlphabet& atoms, const ClusterVocabulary& vocab) {
  AtomAlphabet tree;
  tree.mode = AlphabetMode::clusters;
  tree.labels = atoms.labels;
  tree.max_valence = atoms.max_valence;
  for (const auto& p : vocab.patterns) {
    tree.labels.push_back("ring:" + p.name());
    tree.max_valence.push_back(-1);
  }
  tree.validate();
  return tree;
}

LabeledGraph tree_decompose(const LabeledGraph& graph, const AtomAlphabet& atoms,
                            const ClusterVocabulary& vocab) {
  if (atoms.mode != AlphabetMode::atoms) {
    raise(ErrorCode::invalid_argument, "tree_decompose expects an atom-mode graph");
  }
  const auto rings = cycle_basis(graph);
  const int num_rings = static_cast<int>(rings.size());

  std::vector<int> ring_label(num_rings);
  for (int r = 0; r < num_rings; ++r) {
    const RingPattern p = canonical_ring(graph, atoms, rings[r]);
    const int idx = vocab.find(p);
    if (idx < 0) {
      raise(ErrorCode::ring_not_in_vocabulary,
            "ring '" + p.name() + "' is not in the cluster vocabulary");
    }
    ring_label[r] = atoms.size() + idx;
  }

  std::vector<std::vector<int>> rings_of_node(graph.num_nodes);
  for (int r = 0; r < num_rings; ++r) {
    for (int v : rings[r]) rings_of_node[v].push_back(r);
  }

  // Tree node ids: one per ring first, then one per non-ring atom.
  std::vector<int> atom_node(graph.num_nodes, -1);
  int next_id = num_rings;
  for (int v = 0; v < graph.num_nodes; ++v) {
    if (rings_of_node[v].empty()) atom_node[v] = next_id++;
  }

  LabeledGraph tree;
  tree.num_nodes = next_id;
  tree.labels.resize(next_id);
  for (int r = 0; r < num_rings; ++r) tree.labels[r] = ring_label[r];
  for (int v = 0; v < graph.num_nodes; ++v) {
    if (atom_node[v] >= 0) tree.labels[atom_node[v]] = graph.labels[v];
  }

  std::set<std::pair<int, int>> tree_edges;
  std::vector<Edge> plain_edges;
  auto connect = [&](int x, int y, int order) {
    if (x == y) return;
    const auto key = std::minmax(x, y);
    if (tree_edges.insert({key.first, key.second}).second) {
      plain_edges.push_back(make_edge(x, y, order));
    }
  };

  for (const Edge& e : graph.edges) {
    const auto& ra = rings_of_node[e.a];
    const auto& rb = rings_of_node[e.b];
    if (ra.empty() && rb.empty()) {
      connect(atom_node[e.a], atom_node[e.b], e.order);
    } else if (ra.empty()) {
      for (int r : rb) connect(atom_node[e.a], r, 1);
    } else if (rb.empty()) {
      for (int r : ra) connect(atom_node[e.b], r, 1);
    } else {
      // Bond between two ring atoms outside a shared ring links the clusters.
      bool shared = false;
      for (int r : ra) {
        for (int s : rb) {
          if (r == s) shared = true;
        }
      }
      if (!shared) {
        for (int r : ra) {
          for (int s : rb) connect(r, s, 1);
        }
      }
    }
  }
  // Rings sharing an atom are adjacent in the tree.
  for (int v = 0; v < graph.num_nodes; ++v) {
    const auto& rs = rings_of_node[v];
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (std::size_t j = i + 1; j < rs.size(); ++j) connect(rs[i], rs[j], 1);
    }
  }
  tree.edges = std::move(plain_edges);
  std::sort(tree.edges.begin(), tree.edges.end(), [](const Edge& x, const Edge& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });

  if (graph.has_coords()) {
    tree.coord_dim = graph.coord_dim;
    tree.coords.assign(static_cast<std::size_t>(tree.num_nodes) * tree.coord_dim, 0.0);
    for (int r = 0; r < num_rings; ++r) {
      for (int v : rings[r]) {
        for (int d = 0; d < tree.coord_dim; ++d) tree.coord(r)[d] += graph.coord(v)[d];
      }
      for (int d = 0; d < tree.coord_dim; ++d) {
        tree.coord(r)[d] /= static_cast<double>(rings[r].size());
      }
    }
    for (int v = 0; v < graph.num_nodes; ++v) {
      if (atom_node[v] >= 0) {
        for (int d = 0; d < tree.coord_dim; ++d) {
          tree.coord(atom_node[v])[d] = graph.coord(v)[d];
        }
      }
    }
  }
  return tree;
}

LabeledGraph expand_clusters(const LabeledGraph& tree, const AtomAlphabet& atoms,
                             const ClusterVocabulary& vocab) {
  const int num_atom_labels = atoms.size();
  LabeledGraph out;
  std::vector<int> first_atom(tree.num_nodes, -1);
  std::vector<int> member_count(tree.num_nodes, 1);
  for (int v = 0; v < tree.num_nodes; ++v) {
    const int label = tree.labels[v];
    first_atom[v] = out.num_nodes;
    if (label < num_atom_labels) {
      out.labels.push_back(label);
      ++out.num_nodes;
    } else {
      const RingPattern& p = vocab.patterns[label - num_atom_labels];
      member_count[v] = p.size();
      for (int k = 0; k < p.size(); ++k) {
        const int idx = atoms.index_of(p.symbols[k]);
        if (idx < 0) {
          raise(ErrorCode::unknown_atom_symbol,
                "vocabulary symbol '" + p.symbols[k] + "' not in atom alphabet");
        }
        out.labels.push_back(idx);
      }
      for (int k = 0; k < p.size(); ++k) {
        out.edges.push_back(make_edge(out.num_nodes + k, out.num_nodes + (k + 1) % p.size(),
                                      p.orders[k]));
      }
      out.num_nodes += p.size();
    }
  }
  // Attachments rotate over ring positions so multiple substituents spread out.
  std::vector<int> cursor(tree.num_nodes, 0);
  auto attach_point = [&](int v) {
    const int at = first_atom[v] + cursor[v] % member_count[v];
    ++cursor[v];
    return at;
  };
  std::vector<Edge> sorted_edges(tree.edges);
  std::sort(sorted_edges.begin(), sorted_edges.end(), [](const Edge& x, const Edge& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  for (const Edge& e : sorted_edges) {
    out.edges.push_back(make_edge(attach_point(e.a), attach_point(e.b), e.order));
  }
  return out;
}

}  // namespace modflow
