#include "modflow/smiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "modflow/errors.hpp"

namespace modflow {

namespace {

bool is_organic_symbol_start(char c) {
  switch (c) {
    case 'B': case 'C': case 'N': case 'O': case 'P': case 'S':
    case 'F': case 'I': case 'H':
      return true;
    default:
      return false;
  }
}

bool is_aromatic_atom(char c) {
  switch (c) {
    case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
      return true;
    default:
      return false;
  }
}

struct RingBond {
  int atom = -1;
  int order = 0;  // 0 = unspecified at the opening position
};

}  // namespace

SymbolGraph parse_smiles_symbols(const std::string& text) {
  if (text.empty()) raise(ErrorCode::empty_input, "empty SMILES string");

  SymbolGraph g;
  std::vector<int> branch_stack;
  std::map<int, RingBond> open_rings;
  int prev_atom = -1;
  int pending_order = 0;  // bond symbol seen, waiting for its second atom

  auto add_atom = [&](const std::string& symbol) {
    const int idx = static_cast<int>(g.symbols.size());
    g.symbols.push_back(symbol);
    if (prev_atom >= 0) {
      g.edges.push_back(make_edge(prev_atom, idx, pending_order == 0 ? 1 : pending_order));
    }
    pending_order = 0;
    prev_atom = idx;
  };

  auto close_ring = [&](int digit) {
    auto it = open_rings.find(digit);
    if (prev_atom < 0) {
      raise(ErrorCode::malformed_input, "ring bond digit before any atom");
    }
    if (it == open_rings.end()) {
      open_rings[digit] = RingBond{prev_atom, pending_order};
    } else {
      const RingBond open = it->second;
      open_rings.erase(it);
      if (open.atom == prev_atom) {
        raise(ErrorCode::malformed_input, "ring bond closes on its own atom");
      }
      int order = 1;
      if (open.order != 0 && pending_order != 0 && open.order != pending_order) {
        raise(ErrorCode::malformed_input, "conflicting bond orders on ring closure");
      }
      if (open.order != 0) order = open.order;
      if (pending_order != 0) order = pending_order;
      g.edges.push_back(make_edge(open.atom, prev_atom, order));
    }
    pending_order = 0;
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (is_aromatic_atom(c)) {
      raise(ErrorCode::aromatic_input_rejected,
            std::string("aromatic atom '") + c + "' rejected; input must be kekulized");
    }
    if (c == ':') {
      raise(ErrorCode::aromatic_input_rejected, "aromatic bond ':' rejected; input must be kekulized");
    }
    if (is_organic_symbol_start(c)) {
      std::string symbol(1, c);
      if (c == 'C' && i + 1 < n && text[i + 1] == 'l') {
        symbol = "Cl";
        ++i;
      } else if (c == 'B' && i + 1 < n && text[i + 1] == 'r') {
        symbol = "Br";
        ++i;
      }
      add_atom(symbol);
      ++i;
      continue;
    }
    switch (c) {
      case '-':
        pending_order = 1;
        ++i;
        break;
      case '=':
        pending_order = 2;
        ++i;
        break;
      case '#':
        pending_order = 3;
        ++i;
        break;
      case '(':
        if (prev_atom < 0) raise(ErrorCode::malformed_input, "branch before any atom");
        branch_stack.push_back(prev_atom);
        ++i;
        break;
      case ')':
        if (branch_stack.empty()) {
          raise(ErrorCode::unbalanced_parentheses, "unmatched ')'");
        }
        prev_atom = branch_stack.back();
        branch_stack.pop_back();
        ++i;
        break;
      case '%': {
        if (i + 2 >= n || !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
            !std::isdigit(static_cast<unsigned char>(text[i + 2]))) {
          raise(ErrorCode::malformed_input, "'%' ring bond needs two digits");
        }
        close_ring((text[i + 1] - '0') * 10 + (text[i + 2] - '0'));
        i += 3;
        break;
      }
      default:
        if (c >= '1' && c <= '9') {
          close_ring(c - '0');
          ++i;
          break;
        }
        if (c == '[' || c == ']' || c == '+' || c == '@' || c == '/' || c == '\\' ||
            c == '.' || c == '*') {
          raise(ErrorCode::malformed_input,
                std::string("unsupported SMILES feature '") + c + "'");
        }
        raise(ErrorCode::unknown_atom_symbol, std::string("unknown symbol '") + c + "'");
    }
  }
  if (!branch_stack.empty()) {
    raise(ErrorCode::unbalanced_parentheses, "unmatched '('");
  }
  if (!open_rings.empty()) {
    raise(ErrorCode::dangling_ring_bond,
          "ring bond " + std::to_string(open_rings.begin()->first) + " never closed");
  }
  if (pending_order != 0) {
    raise(ErrorCode::malformed_input, "trailing bond symbol");
  }
  return g;
}

LabeledGraph parse_smiles(const std::string& text, const AtomAlphabet& alphabet) {
  const SymbolGraph sg = parse_smiles_symbols(text);
  LabeledGraph g;
  g.num_nodes = static_cast<int>(sg.symbols.size());
  g.edges = sg.edges;
  g.labels.reserve(sg.symbols.size());
  for (const auto& s : sg.symbols) {
    const int idx = alphabet.index_of(s);
    if (idx < 0) {
      raise(ErrorCode::unknown_atom_symbol, "atom symbol '" + s + "' not in alphabet");
    }
    g.labels.push_back(idx);
  }
  g.validate(alphabet.size());
  return g;
}

namespace {

struct Writer {
  const LabeledGraph& graph;
  const AtomAlphabet& alphabet;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, order)
  std::vector<char> visited;
  std::vector<std::vector<std::pair<int, int>>> ring_marks;  // node -> (digit, order)
  std::string out;

  static const char* bond_text(int order) {
    switch (order) {
      case 2: return "=";
      case 3: return "#";
      default: return "";
    }
  }

  void emit_atom(int node) {
    out += alphabet.labels[graph.labels[node]];
    for (const auto& [digit, order] : ring_marks[node]) {
      out += bond_text(order);
      if (digit > 9) {
        out += '%';
        out += static_cast<char>('0' + digit / 10);
      }
      out += static_cast<char>('0' + digit % 10);
    }
  }

  void walk(int node, int parent) {
    visited[node] = 1;
    emit_atom(node);
    std::vector<std::pair<int, int>> children;
    for (const auto& [next, order] : adj[node]) {
      if (next != parent && !visited[next]) children.push_back({next, order});
    }
    // Re-check after recursion may have visited a child through a ring.
    for (std::size_t c = 0; c < children.size(); ++c) {
      const auto [next, order] = children[c];
      if (visited[next]) continue;
      bool more = false;
      for (std::size_t d = c + 1; d < children.size(); ++d) {
        if (!visited[children[d].first]) more = true;
      }
      if (more) {
        out += '(';
        out += bond_text(order);
        walk(next, node);
        out += ')';
      } else {
        out += bond_text(order);
        walk(next, node);
      }
    }
  }
};

}  // namespace

std::string write_smiles(const LabeledGraph& graph, const AtomAlphabet& alphabet) {
  if (alphabet.mode != AlphabetMode::atoms) {
    raise(ErrorCode::invalid_argument, "write_smiles requires an atom-mode graph");
  }
  if (graph.num_nodes == 0) raise(ErrorCode::empty_input, "cannot write an empty graph");
  if (!graph.is_connected()) {
    raise(ErrorCode::disconnected_graph, "write_smiles requires a connected graph");
  }

  // Deterministic neighbor order: refine by a per-node structural key so the
  // emission does not depend on edge storage order.
  const int n = graph.num_nodes;
  std::vector<std::uint64_t> key(n);
  {
    std::vector<int> deg = graph.degrees();
    for (int i = 0; i < n; ++i) {
      key[i] = (static_cast<std::uint64_t>(graph.labels[i]) << 32) ^
               (static_cast<std::uint64_t>(deg[i]) << 16);
    }
  }

  Writer w{graph, alphabet, {}, {}, {}, {}};
  w.adj.resize(n);
  for (const Edge& e : graph.edges) {
    w.adj[e.a].push_back({e.b, e.order});
    w.adj[e.b].push_back({e.a, e.order});
  }
  for (int i = 0; i < n; ++i) {
    std::sort(w.adj[i].begin(), w.adj[i].end(),
              [&](const std::pair<int, int>& x, const std::pair<int, int>& y) {
                return std::tuple(key[x.first], x.first) < std::tuple(key[y.first], y.first);
              });
  }

  // Spanning DFS; each non-tree edge becomes a ring-closure digit pair.
  std::vector<char> in_tree_visited(n, 0);
  std::vector<std::pair<int, int>> tree_parent(n, {-1, 0});
  std::vector<std::tuple<int, int, int>> ring_edges;  // (a, b, order)
  {
    std::vector<int> stack = {0};
    in_tree_visited[0] = 1;
    std::vector<std::size_t> cursor(n, 0);
    while (!stack.empty()) {
      const int u = stack.back();
      if (cursor[u] == w.adj[u].size()) {
        stack.pop_back();
        continue;
      }
      const auto [v, order] = w.adj[u][cursor[u]++];
      if (!in_tree_visited[v]) {
        in_tree_visited[v] = 1;
        tree_parent[v] = {u, order};
        stack.push_back(v);
      } else if (tree_parent[u].first != v) {
        bool dup = false;
        for (const auto& [a, b, o] : ring_edges) {
          if ((a == u && b == v) || (a == v && b == u)) dup = true;
        }
        if (!dup) ring_edges.push_back({std::min(u, v), std::max(u, v), order});
      }
    }
  }
  std::sort(ring_edges.begin(), ring_edges.end());

  w.ring_marks.resize(n);
  int next_digit = 1;
  for (const auto& [a, b, order] : ring_edges) {
    // Bond symbol only at the opening endpoint; the parser accepts either.
    w.ring_marks[a].push_back({next_digit, order});
    w.ring_marks[b].push_back({next_digit, 1});
    ++next_digit;
  }

  w.visited.assign(n, 0);
  w.walk(0, -1);
  return w.out;
}

std::vector<double> layout_2d(const LabeledGraph& graph) {
  const int n = graph.num_nodes;
  std::vector<double> pos(static_cast<std::size_t>(n) * 2, 0.0);
  if (n == 0) return pos;
  if (n == 1) return pos;  // single node sits at the origin

  // Deterministic start: nodes on a unit circle ordered by their structural
  // refinement color, so relabeling the nodes relabels the layout with them.
  std::vector<int> rank(n);
  {
    const std::vector<std::uint64_t> colors = wl_node_colors(graph);
    std::vector<int> by_color(n);
    std::iota(by_color.begin(), by_color.end(), 0);
    std::sort(by_color.begin(), by_color.end(), [&](int x, int y) {
      return std::pair(colors[x], x) < std::pair(colors[y], y);
    });
    for (int r = 0; r < n; ++r) rank[by_color[r]] = r;
  }
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * M_PI * rank[i] / n;
    pos[2 * i] = std::cos(angle);
    pos[2 * i + 1] = std::sin(angle);
  }

  std::vector<char> bonded(static_cast<std::size_t>(n) * n, 0);
  for (const Edge& e : graph.edges) {
    bonded[static_cast<std::size_t>(e.a) * n + e.b] = 1;
    bonded[static_cast<std::size_t>(e.b) * n + e.a] = 1;
  }

  // Springs of rest length 1 on bonds, inverse-square repulsion between
  // non-bonded pairs, damped updates with a fixed schedule.
  std::vector<double> force(static_cast<std::size_t>(n) * 2);
  const int iterations = 600;
  for (int it = 0; it < iterations; ++it) {
    std::fill(force.begin(), force.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double dx = pos[2 * i] - pos[2 * j];
        double dy = pos[2 * i + 1] - pos[2 * j + 1];
        double d2 = dx * dx + dy * dy;
        if (d2 < 1e-12) {
          // Coincident points: deterministic separation by structural rank.
          dx = 1e-6 * (rank[i] + 1);
          dy = 1e-6 * (rank[j] + 1);
          d2 = dx * dx + dy * dy;
        }
        const double d = std::sqrt(d2);
        if (bonded[static_cast<std::size_t>(i) * n + j]) {
          const double f = (d - 1.0) / d;
          force[2 * i] -= f * dx;
          force[2 * i + 1] -= f * dy;
          force[2 * j] += f * dx;
          force[2 * j + 1] += f * dy;
        } else {
          const double f = 0.2 / (d2 * d);
          force[2 * i] += f * dx;
          force[2 * i + 1] += f * dy;
          force[2 * j] -= f * dx;
          force[2 * j + 1] -= f * dy;
        }
      }
    }
    const double step = it < 200 ? 0.1 : (it < 400 ? 0.05 : 0.02);
    for (std::size_t k = 0; k < pos.size(); ++k) pos[k] += step * force[k];
  }

  double cx = 0.0, cy = 0.0;
  for (int i = 0; i < n; ++i) {
    cx += pos[2 * i];
    cy += pos[2 * i + 1];
  }
  cx /= n;
  cy /= n;
  for (int i = 0; i < n; ++i) {
    pos[2 * i] -= cx;
    pos[2 * i + 1] -= cy;
  }
  return pos;
}

}  // namespace modflow
