#include "modflow/egnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "modflow/errors.hpp"
#include "modflow/rng.hpp"

namespace modflow {

namespace {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double silu(double x) { return x * sigmoid(x); }

inline double silu_d1(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

inline double silu_d2(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter storage

namespace {

struct Layout {
  std::size_t w_e1, b_e1, w_e2, b_e2, w_h1, b_h1, w_h2, b_h2;
  std::size_t w_x1, b_x1, w_x2, b_x2, total;
};

Layout layout_for(int k, int h, int arity) {
  const std::size_t e_in = 2 * k + 1 + arity;
  const std::size_t h_in = k + h + 1;
  Layout l{};
  std::size_t off = 0;
  l.w_e1 = off; off += h * e_in;
  l.b_e1 = off; off += h;
  l.w_e2 = off; off += static_cast<std::size_t>(h) * h;
  l.b_e2 = off; off += h;
  l.w_h1 = off; off += h * h_in;
  l.b_h1 = off; off += h;
  l.w_h2 = off; off += static_cast<std::size_t>(k) * h;
  l.b_h2 = off; off += k;
  l.w_x1 = off; off += static_cast<std::size_t>(h) * h;
  l.b_x1 = off; off += h;
  l.w_x2 = off; off += h;
  l.b_x2 = off; off += 1;
  l.total = off;
  return l;
}

}  // namespace

std::size_t EgnnParams::count_for(int label_dim, int hidden_dim, int bond_arity) {
  return layout_for(label_dim, hidden_dim, bond_arity).total;
}

#define MODFLOW_PARAM_SPAN(NAME, SIZE_EXPR)                                              \
  std::span<double> EgnnParams::NAME() {                                                 \
    const Layout l = layout_for(label_dim, hidden_dim, bond_arity);                      \
    return std::span<double>(values.data() + l.NAME, static_cast<std::size_t>(SIZE_EXPR)); \
  }                                                                                      \
  std::span<const double> EgnnParams::NAME() const {                                     \
    const Layout l = layout_for(label_dim, hidden_dim, bond_arity);                      \
    return std::span<const double>(values.data() + l.NAME,                               \
                                   static_cast<std::size_t>(SIZE_EXPR));                 \
  }

MODFLOW_PARAM_SPAN(w_e1, hidden_dim * edge_in())
MODFLOW_PARAM_SPAN(b_e1, hidden_dim)
MODFLOW_PARAM_SPAN(w_e2, hidden_dim * hidden_dim)
MODFLOW_PARAM_SPAN(b_e2, hidden_dim)
MODFLOW_PARAM_SPAN(w_h1, hidden_dim * node_in())
MODFLOW_PARAM_SPAN(b_h1, hidden_dim)
MODFLOW_PARAM_SPAN(w_h2, label_dim * hidden_dim)
MODFLOW_PARAM_SPAN(b_h2, label_dim)
MODFLOW_PARAM_SPAN(w_x1, hidden_dim * hidden_dim)
MODFLOW_PARAM_SPAN(b_x1, hidden_dim)
MODFLOW_PARAM_SPAN(w_x2, hidden_dim)
MODFLOW_PARAM_SPAN(b_x2, 1)

#undef MODFLOW_PARAM_SPAN

EgnnParams init_params(std::uint64_t seed, int label_dim, int bond_arity, int hidden_dim) {
  if (label_dim < 2) raise(ErrorCode::invalid_argument, "label dimension must be >= 2");
  EgnnParams p;
  p.label_dim = label_dim;
  p.hidden_dim = hidden_dim;
  p.bond_arity = bond_arity;
  p.values.assign(EgnnParams::count_for(label_dim, hidden_dim, bond_arity), 0.0);

  Rng rng(seed);
  auto fill = [&](std::span<double> w, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = rng.uniform(-bound, bound);
  };
  fill(p.w_e1(), p.edge_in());
  fill(p.w_e2(), hidden_dim);
  fill(p.w_h1(), p.node_in());
  fill(p.w_h2(), hidden_dim);
  fill(p.w_x1(), hidden_dim);
  fill(p.w_x2(), hidden_dim);
  return p;
}

// ---------------------------------------------------------------------------
// Graph context

GraphContext::GraphContext(const LabeledGraph& graph, std::span<const double> coords,
                           int coord_dim) {
  num_nodes = graph.num_nodes;
  if (coord_dim <= 0 ||
      coords.size() != static_cast<std::size_t>(num_nodes) * coord_dim) {
    raise(ErrorCode::shape_mismatch, "graph context needs one coordinate row per node");
  }
  arcs.reserve(graph.edges.size() * 2);
  for (const Edge& e : graph.edges) {
    double d2 = 0.0;
    for (int d = 0; d < coord_dim; ++d) {
      const double diff = coords[static_cast<std::size_t>(e.a) * coord_dim + d] -
                          coords[static_cast<std::size_t>(e.b) * coord_dim + d];
      d2 += diff * diff;
    }
    const int bond = std::clamp(e.order, 1, 3) - 1;
    arcs.push_back({e.a, e.b, d2, bond});
    arcs.push_back({e.b, e.a, d2, bond});
  }
  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) {
    return std::pair(x.dst, x.src) < std::pair(y.dst, y.src);
  });
  arc_begin.assign(num_nodes + 1, 0);
  for (const Arc& a : arcs) ++arc_begin[a.dst + 1];
  for (int i = 0; i < num_nodes; ++i) arc_begin[i + 1] += arc_begin[i];
}

// ---------------------------------------------------------------------------
// Differential

EgnnDifferential::EgnnDifferential(const EgnnParams& params, const GraphContext& graph)
    : params_(&params), graph_(&graph) {
  const std::size_t e = graph.arcs.size();
  const std::size_t m = graph.num_nodes;
  const std::size_t h = params.hidden_dim;
  pre_e1_.resize(e * h);
  act_e1_.resize(e * h);
  pre_e2_.resize(e * h);
  msg_.resize(e * h);
  msum_.resize(m * h);
  pre_h1_.resize(m * h);
  act_h1_.resize(m * h);
  kappa_.resize(h);
  sp_.resize(h);
  sq_.resize(h);
  col_.resize(h);
  ccols_.resize(static_cast<std::size_t>(params.label_dim) * h);
  xt_.resize(h * h);
}

void EgnnDifferential::forward_pass(double t, const Matrix& z) const {
  const int k = params_->label_dim;
  const int h = params_->hidden_dim;
  const int e_in = params_->edge_in();
  const int h_in = params_->node_in();
  const auto w_e1 = params_->w_e1();
  const auto b_e1 = params_->b_e1();
  const auto w_e2 = params_->w_e2();
  const auto b_e2 = params_->b_e2();
  const auto w_h1 = params_->w_h1();
  const auto b_h1 = params_->b_h1();

  if (z.rows != graph_->num_nodes || z.cols != k) {
    raise(ErrorCode::shape_mismatch, "score matrix does not match differential dims");
  }

  std::vector<double> u(e_in);
  for (std::size_t a = 0; a < graph_->arcs.size(); ++a) {
    const GraphContext::Arc& arc = graph_->arcs[a];
    std::memcpy(u.data(), z.row(arc.dst), sizeof(double) * k);
    std::memcpy(u.data() + k, z.row(arc.src), sizeof(double) * k);
    u[2 * k] = arc.d2;
    for (int b = 0; b < params_->bond_arity; ++b) u[2 * k + 1 + b] = 0.0;
    u[2 * k + 1 + arc.bond] = 1.0;

    double* pe1 = pre_e1_.data() + a * h;
    matvec(w_e1, h, e_in, u.data(), pe1);
    double* ae1 = act_e1_.data() + a * h;
    for (int i = 0; i < h; ++i) {
      pe1[i] += b_e1[i];
      ae1[i] = silu(pe1[i]);
    }
    double* pe2 = pre_e2_.data() + a * h;
    matvec(w_e2, h, h, ae1, pe2);
    double* mg = msg_.data() + a * h;
    for (int i = 0; i < h; ++i) {
      pe2[i] += b_e2[i];
      mg[i] = silu(pe2[i]);
    }
  }

  std::vector<int> order;
  std::vector<double> v(h_in);
  for (int i = 0; i < graph_->num_nodes; ++i) {
    double* ms = msum_.data() + static_cast<std::size_t>(i) * h;
    std::fill(ms, ms + h, 0.0);
    const int begin = graph_->arc_begin[i];
    const int end = graph_->arc_begin[i + 1];
    // Value-sorted aggregation keeps the neighbor sum bit-exact under node
    // relabeling (float addition commutes but does not associate).
    order.resize(end - begin);
    std::iota(order.begin(), order.end(), begin);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      const double* mx = msg_.data() + static_cast<std::size_t>(x) * h;
      const double* my = msg_.data() + static_cast<std::size_t>(y) * h;
      return std::lexicographical_compare(mx, mx + h, my, my + h);
    });
    for (int a : order) {
      const double* mg = msg_.data() + static_cast<std::size_t>(a) * h;
      for (int c = 0; c < h; ++c) ms[c] += mg[c];
    }

    std::memcpy(v.data(), z.row(i), sizeof(double) * k);
    std::memcpy(v.data() + k, ms, sizeof(double) * h);
    v[k + h] = t;
    double* ph1 = pre_h1_.data() + static_cast<std::size_t>(i) * h;
    matvec(w_h1, h, h_in, v.data(), ph1);
    double* ah1 = act_h1_.data() + static_cast<std::size_t>(i) * h;
    for (int c = 0; c < h; ++c) {
      ph1[c] += b_h1[c];
      ah1[c] = silu(ph1[c]);
    }
  }
}

void EgnnDifferential::eval(double t, const Matrix& z, Matrix& dz) const {
  const int k = params_->label_dim;
  const int h = params_->hidden_dim;
  forward_pass(t, z);
  dz.rows = z.rows;
  dz.cols = z.cols;
  dz.a.resize(z.a.size());
  const auto w_h2 = params_->w_h2();
  const auto b_h2 = params_->b_h2();
  for (int i = 0; i < graph_->num_nodes; ++i) {
    double* out = dz.row(i);
    matvec(w_h2, k, h, act_h1_.data() + static_cast<std::size_t>(i) * h, out);
    for (int c = 0; c < k; ++c) out[c] += b_h2[c];
  }
}

void EgnnDifferential::trace(double t, const Matrix& z, std::span<double> out) const {
  const int k = params_->label_dim;
  const int h = params_->hidden_dim;
  forward_pass(t, z);
  const auto w_e1 = params_->w_e1();
  const auto w_e2 = params_->w_e2();
  const auto w_h1 = params_->w_h1();
  const auto w_h2 = params_->w_h2();
  const int e_in = params_->edge_in();
  const int h_in = params_->node_in();

  // kappa[g] = sum_k W_h2[k,g] * W_h1[g,k]: the state-independent part of
  // tr(d phi_h / d z_i) before the hidden activation slope.
  std::vector<double> kappa(h, 0.0);
  for (int g = 0; g < h; ++g) {
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
      acc += w_h2[static_cast<std::size_t>(c) * h + g] *
             w_h1[static_cast<std::size_t>(g) * h_in + c];
    }
    kappa[g] = acc;
  }

  std::vector<double> spw(static_cast<std::size_t>(h) * k);  // diag(sp) * W_e1z
  std::vector<double> eblk(static_cast<std::size_t>(h) * k); // W_e2 * spw
  std::vector<double> cmat(static_cast<std::size_t>(h) * k);
  std::vector<double> xmat(static_cast<std::size_t>(h) * h); // C * W_h2

  for (int i = 0; i < graph_->num_nodes; ++i) {
    std::fill(cmat.begin(), cmat.end(), 0.0);
    for (int a = graph_->arc_begin[i]; a < graph_->arc_begin[i + 1]; ++a) {
      const double* pe1 = pre_e1_.data() + static_cast<std::size_t>(a) * h;
      const double* pe2 = pre_e2_.data() + static_cast<std::size_t>(a) * h;
      for (int l = 0; l < h; ++l) {
        const double sp = silu_d1(pe1[l]);
        for (int c = 0; c < k; ++c) {
          spw[static_cast<std::size_t>(l) * k + c] =
              sp * w_e1[static_cast<std::size_t>(l) * e_in + c];
        }
      }
      for (int g = 0; g < h; ++g) {
        double* er = eblk.data() + static_cast<std::size_t>(g) * k;
        std::fill(er, er + k, 0.0);
        const double* w2r = w_e2.data() + static_cast<std::size_t>(g) * h;
        for (int l = 0; l < h; ++l) {
          const double wv = w2r[l];
          const double* sr = spw.data() + static_cast<std::size_t>(l) * k;
          for (int c = 0; c < k; ++c) er[c] += wv * sr[c];
        }
        const double sq = silu_d1(pe2[g]);
        double* cr = cmat.data() + static_cast<std::size_t>(g) * k;
        for (int c = 0; c < k; ++c) cr[c] += sq * er[c];
      }
    }
    // xmat = C * W_h2 (message-space square), then contract with W_h1m rows.
    for (int row = 0; row < h; ++row) {
      const double* cr = cmat.data() + static_cast<std::size_t>(row) * k;
      double* xr = xmat.data() + static_cast<std::size_t>(row) * h;
      std::fill(xr, xr + h, 0.0);
      for (int c = 0; c < k; ++c) {
        const double cv = cr[c];
        const double* w2r = w_h2.data() + static_cast<std::size_t>(c) * h;
        for (int g = 0; g < h; ++g) xr[g] += cv * w2r[g];
      }
    }
    const double* ph1 = pre_h1_.data() + static_cast<std::size_t>(i) * h;
    double tr = 0.0;
    for (int g = 0; g < h; ++g) {
      double coupled = 0.0;
      const double* w1r = w_h1.data() + static_cast<std::size_t>(g) * h_in + k;
      for (int row = 0; row < h; ++row) {
        coupled += w1r[row] * xmat[static_cast<std::size_t>(row) * h + g];
      }
      tr += silu_d1(ph1[g]) * (kappa[g] + coupled);
    }
    out[i] = tr;
  }
}

void EgnnDifferential::vjp(double t, const Matrix& z, const Matrix& cotangent,
                           Matrix& grad_z, std::span<double> grad_params) const {
  const int k = params_->label_dim;
  const int h = params_->hidden_dim;
  const int e_in = params_->edge_in();
  const int h_in = params_->node_in();
  forward_pass(t, z);

  grad_z.rows = z.rows;
  grad_z.cols = z.cols;
  grad_z.a.assign(z.a.size(), 0.0);
  std::fill(grad_params.begin(), grad_params.end(), 0.0);

  const Layout lay = layout_for(k, h, params_->bond_arity);
  const auto w_e1 = params_->w_e1();
  const auto w_e2 = params_->w_e2();
  const auto w_h1 = params_->w_h1();
  const auto w_h2 = params_->w_h2();
  std::span<double> g_w_e1(grad_params.data() + lay.w_e1, w_e1.size());
  std::span<double> g_b_e1(grad_params.data() + lay.b_e1, static_cast<std::size_t>(h));
  std::span<double> g_w_e2(grad_params.data() + lay.w_e2, w_e2.size());
  std::span<double> g_b_e2(grad_params.data() + lay.b_e2, static_cast<std::size_t>(h));
  std::span<double> g_w_h1(grad_params.data() + lay.w_h1, w_h1.size());
  std::span<double> g_b_h1(grad_params.data() + lay.b_h1, static_cast<std::size_t>(h));
  std::span<double> g_w_h2(grad_params.data() + lay.w_h2, w_h2.size());
  std::span<double> g_b_h2(grad_params.data() + lay.b_h2, static_cast<std::size_t>(k));

  std::vector<double> gs(h), gr(h), gm(h), gq(h), gh(h), gp(h);
  std::vector<double> u(e_in), v(h_in);

  for (int i = 0; i < graph_->num_nodes; ++i) {
    const double* wrow = cotangent.row(i);
    const double* ah1 = act_h1_.data() + static_cast<std::size_t>(i) * h;
    const double* ph1 = pre_h1_.data() + static_cast<std::size_t>(i) * h;

    std::fill(gs.begin(), gs.end(), 0.0);
    matvec_transposed_add(w_h2, k, h, wrow, gs.data());
    for (int g = 0; g < h; ++g) gr[g] = silu_d1(ph1[g]) * gs[g];

    outer_add(g_w_h2, k, h, wrow, ah1);
    for (int c = 0; c < k; ++c) g_b_h2[c] += wrow[c];

    std::memcpy(v.data(), z.row(i), sizeof(double) * k);
    std::memcpy(v.data() + k, msum_.data() + static_cast<std::size_t>(i) * h,
                sizeof(double) * h);
    v[k + h] = t;
    outer_add(g_w_h1, h, h_in, gr.data(), v.data());
    for (int g = 0; g < h; ++g) g_b_h1[g] += gr[g];

    double* gz_i = grad_z.row(i);
    std::fill(gm.begin(), gm.end(), 0.0);
    for (int g = 0; g < h; ++g) {
      const double* w1r = w_h1.data() + static_cast<std::size_t>(g) * h_in;
      const double grg = gr[g];
      for (int c = 0; c < k; ++c) gz_i[c] += grg * w1r[c];
      for (int c = 0; c < h; ++c) gm[c] += grg * w1r[k + c];
    }

    for (int a = graph_->arc_begin[i]; a < graph_->arc_begin[i + 1]; ++a) {
      const GraphContext::Arc& arc = graph_->arcs[a];
      const double* pe1 = pre_e1_.data() + static_cast<std::size_t>(a) * h;
      const double* ae1 = act_e1_.data() + static_cast<std::size_t>(a) * h;
      const double* pe2 = pre_e2_.data() + static_cast<std::size_t>(a) * h;

      for (int g = 0; g < h; ++g) gq[g] = silu_d1(pe2[g]) * gm[g];
      outer_add(g_w_e2, h, h, gq.data(), ae1);
      for (int g = 0; g < h; ++g) g_b_e2[g] += gq[g];

      std::fill(gh.begin(), gh.end(), 0.0);
      matvec_transposed_add(w_e2, h, h, gq.data(), gh.data());
      for (int l = 0; l < h; ++l) gp[l] = silu_d1(pe1[l]) * gh[l];

      std::memcpy(u.data(), z.row(arc.dst), sizeof(double) * k);
      std::memcpy(u.data() + k, z.row(arc.src), sizeof(double) * k);
      u[2 * k] = arc.d2;
      for (int b = 0; b < params_->bond_arity; ++b) u[2 * k + 1 + b] = 0.0;
      u[2 * k + 1 + arc.bond] = 1.0;
      outer_add(g_w_e1, h, e_in, gp.data(), u.data());
      for (int l = 0; l < h; ++l) g_b_e1[l] += gp[l];

      double* gz_src = grad_z.row(arc.src);
      for (int l = 0; l < h; ++l) {
        const double* w1r = w_e1.data() + static_cast<std::size_t>(l) * e_in;
        const double gpl = gp[l];
        for (int c = 0; c < k; ++c) {
          gz_i[c] += gpl * w1r[c];
          gz_src[c] += gpl * w1r[k + c];
        }
      }
    }
  }
}

void EgnnDifferential::trace_gradient(double t, const Matrix& z,
                                      std::span<const double> weights, Matrix& grad_z,
                                      std::span<double> grad_params) const {
  const int k = params_->label_dim;
  const int h = params_->hidden_dim;
  const int e_in = params_->edge_in();
  const int h_in = params_->node_in();
  forward_pass(t, z);

  grad_z.rows = z.rows;
  grad_z.cols = z.cols;
  grad_z.a.assign(z.a.size(), 0.0);
  std::fill(grad_params.begin(), grad_params.end(), 0.0);

  const Layout lay = layout_for(k, h, params_->bond_arity);
  const auto w_e1 = params_->w_e1();
  const auto w_e2 = params_->w_e2();
  const auto w_h1 = params_->w_h1();
  const auto w_h2 = params_->w_h2();
  std::span<double> g_w_e1(grad_params.data() + lay.w_e1, w_e1.size());
  std::span<double> g_b_e1(grad_params.data() + lay.b_e1, static_cast<std::size_t>(h));
  std::span<double> g_w_e2(grad_params.data() + lay.w_e2, w_e2.size());
  std::span<double> g_b_e2(grad_params.data() + lay.b_e2, static_cast<std::size_t>(h));
  std::span<double> g_w_h1(grad_params.data() + lay.w_h1, w_h1.size());
  std::span<double> g_b_h1(grad_params.data() + lay.b_h1, static_cast<std::size_t>(h));
  std::span<double> g_w_h2(grad_params.data() + lay.w_h2, w_h2.size());

  std::vector<double> kappa(h, 0.0);
  for (int g = 0; g < h; ++g) {
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
      acc += w_h2[static_cast<std::size_t>(c) * h + g] *
             w_h1[static_cast<std::size_t>(g) * h_in + c];
    }
    kappa[g] = acc;
  }

  // Per-node blocks of the trace algebra; see the matching derivation in
  // trace(): C = sum_j diag(sq) W_e2 diag(sp) W_e1z, B = W_h2 diag(sr) W_h1m.
  const std::size_t hk = static_cast<std::size_t>(h) * k;
  const std::size_t hh = static_cast<std::size_t>(h) * h;
  std::vector<double> spw(hk), cmat(hk), pmat(hk);
  std::vector<double> bmat(static_cast<std::size_t>(k) * h);
  std::vector<double> umat(hh), gmat(hh), tmp_hh(hh);
  std::vector<double> omat(static_cast<std::size_t>(k) * h);
  std::vector<double> tvec(h), dr(h), gm(h), gq(h), ghv(h), gp(h);
  std::vector<double> dq_direct(h), dp_direct(h);
  std::vector<double> u(e_in), v(h_in);

  // Arc-major cache of the per-arc E blocks for the current node.
  int max_deg = 0;
  for (int i = 0; i < graph_->num_nodes; ++i) {
    max_deg = std::max(max_deg, graph_->arc_begin[i + 1] - graph_->arc_begin[i]);
  }
  std::vector<double> eblocks(static_cast<std::size_t>(max_deg) * hk);
  std::vector<double> sp_cache(static_cast<std::size_t>(max_deg) * h);
  std::vector<double> sq_cache(static_cast<std::size_t>(max_deg) * h);

  for (int i = 0; i < graph_->num_nodes; ++i) {
    const double wi = weights[i];
    const int begin = graph_->arc_begin[i];
    const int deg = graph_->arc_begin[i + 1] - begin;
    const double* ph1 = pre_h1_.data() + static_cast<std::size_t>(i) * h;

    // E blocks and C for this node.
    std::fill(cmat.begin(), cmat.end(), 0.0);
    for (int d = 0; d < deg; ++d) {
      const std::size_t a = static_cast<std::size_t>(begin + d);
      const double* pe1 = pre_e1_.data() + a * h;
      const double* pe2 = pre_e2_.data() + a * h;
      double* sp = sp_cache.data() + static_cast<std::size_t>(d) * h;
      double* sq = sq_cache.data() + static_cast<std::size_t>(d) * h;
      for (int l = 0; l < h; ++l) {
        sp[l] = silu_d1(pe1[l]);
        for (int c = 0; c < k; ++c) {
          spw[static_cast<std::size_t>(l) * k + c] =
              sp[l] * w_e1[static_cast<std::size_t>(l) * e_in + c];
        }
      }
      double* eb = eblocks.data() + static_cast<std::size_t>(d) * hk;
      for (int g = 0; g < h; ++g) {
        double* er = eb + static_cast<std::size_t>(g) * k;
        std::fill(er, er + k, 0.0);
        const double* w2r = w_e2.data() + static_cast<std::size_t>(g) * h;
        for (int l = 0; l < h; ++l) {
          const double wv = w2r[l];
          const double* srow = spw.data() + static_cast<std::size_t>(l) * k;
          for (int c = 0; c < k; ++c) er[c] += wv * srow[c];
        }
        sq[g] = silu_d1(pe2[g]);
        double* cr = cmat.data() + static_cast<std::size_t>(g) * k;
        for (int c = 0; c < k; ++c) cr[c] += sq[g] * er[c];
      }
    }

    // B = W_h2 diag(sr) W_h1m (label x message space).
    for (int c = 0; c < k; ++c) {
      double* br = bmat.data() + static_cast<std::size_t>(c) * h;
      std::fill(br, br + h, 0.0);
      const double* w2r = w_h2.data() + static_cast<std::size_t>(c) * h;
      for (int g = 0; g < h; ++g) {
        const double srg = silu_d1(ph1[g]);
        const double scale = w2r[g] * srg;
        const double* w1r = w_h1.data() + static_cast<std::size_t>(g) * h_in + k;
        for (int m = 0; m < h; ++m) br[m] += scale * w1r[m];
      }
    }
    // U = C W_h2, P = W_h1m C, T[g] = sum_m W_h1m[g,m] U[m,g].
    for (int m = 0; m < h; ++m) {
      const double* cr = cmat.data() + static_cast<std::size_t>(m) * k;
      double* ur = umat.data() + static_cast<std::size_t>(m) * h;
      std::fill(ur, ur + h, 0.0);
      for (int c = 0; c < k; ++c) {
        const double cv = cr[c];
        const double* w2r = w_h2.data() + static_cast<std::size_t>(c) * h;
        for (int g = 0; g < h; ++g) ur[g] += cv * w2r[g];
      }
    }
    for (int g = 0; g < h; ++g) {
      double* pr = pmat.data() + static_cast<std::size_t>(g) * k;
      std::fill(pr, pr + k, 0.0);
      const double* w1r = w_h1.data() + static_cast<std::size_t>(g) * h_in + k;
      double acc = 0.0;
      for (int m = 0; m < h; ++m) {
        const double wv = w1r[m];
        acc += wv * umat[static_cast<std::size_t>(m) * h + g];
        const double* cr = cmat.data() + static_cast<std::size_t>(m) * k;
        for (int c = 0; c < k; ++c) pr[c] += wv * cr[c];
      }
      tvec[g] = acc;
    }
    // G = W_e1z^T-style contraction of B: G[l,m] = sum_c W_e1[l,c] B[c,m].
    for (int l = 0; l < h; ++l) {
      double* grow = gmat.data() + static_cast<std::size_t>(l) * h;
      std::fill(grow, grow + h, 0.0);
      const double* w1r = w_e1.data() + static_cast<std::size_t>(l) * e_in;
      for (int c = 0; c < k; ++c) {
        const double wv = w1r[c];
        const double* br = bmat.data() + static_cast<std::size_t>(c) * h;
        for (int m = 0; m < h; ++m) grow[m] += wv * br[m];
      }
    }

    // Seed at the phi_h hidden layer plus explicit parameter terms.
    for (int g = 0; g < h; ++g) {
      dr[g] = wi * silu_d2(ph1[g]) * (kappa[g] + tvec[g]);
    }
    for (int g = 0; g < h; ++g) {
      const double srg = silu_d1(ph1[g]);
      const double* pr = pmat.data() + static_cast<std::size_t>(g) * k;
      for (int c = 0; c < k; ++c) {
        g_w_h2[static_cast<std::size_t>(c) * h + g] +=
            wi * srg * (w_h1[static_cast<std::size_t>(g) * h_in + c] + pr[c]);
        g_w_h1[static_cast<std::size_t>(g) * h_in + c] +=
            wi * srg * w_h2[static_cast<std::size_t>(c) * h + g];
      }
      double* gw1m = g_w_h1.data() + static_cast<std::size_t>(g) * h_in + k;
      for (int m = 0; m < h; ++m) {
        gw1m[m] += wi * srg * umat[static_cast<std::size_t>(m) * h + g];
      }
    }

    // Chain through r_i: gradient towards z_i, m_i and the phi_h weights.
    std::memcpy(v.data(), z.row(i), sizeof(double) * k);
    std::memcpy(v.data() + k, msum_.data() + static_cast<std::size_t>(i) * h,
                sizeof(double) * h);
    v[k + h] = t;
    outer_add(g_w_h1, h, h_in, dr.data(), v.data());
    for (int g = 0; g < h; ++g) g_b_h1[g] += dr[g];

    double* gz_i = grad_z.row(i);
    std::fill(gm.begin(), gm.end(), 0.0);
    for (int g = 0; g < h; ++g) {
      const double* w1r = w_h1.data() + static_cast<std::size_t>(g) * h_in;
      const double drg = dr[g];
      for (int c = 0; c < k; ++c) gz_i[c] += drg * w1r[c];
      for (int m = 0; m < h; ++m) gm[m] += drg * w1r[k + m];
    }

    for (int d = 0; d < deg; ++d) {
      const std::size_t a = static_cast<std::size_t>(begin + d);
      const GraphContext::Arc& arc = graph_->arcs[a];
      const double* pe1 = pre_e1_.data() + a * h;
      const double* pe2 = pre_e2_.data() + a * h;
      const double* ae1 = act_e1_.data() + a * h;
      const double* sp = sp_cache.data() + static_cast<std::size_t>(d) * h;
      const double* sq = sq_cache.data() + static_cast<std::size_t>(d) * h;
      const double* eb = eblocks.data() + static_cast<std::size_t>(d) * hk;

      // Omega[c,l] = sum_m B[c,m] sq[m] W_e2[m,l].
      for (std::size_t x = 0; x < tmp_hh.size(); ++x) tmp_hh[x] = 0.0;
      for (int m = 0; m < h; ++m) {
        const double sqm = sq[m];
        const double* w2r = w_e2.data() + static_cast<std::size_t>(m) * h;
        double* tr = tmp_hh.data() + static_cast<std::size_t>(m) * h;
        for (int l = 0; l < h; ++l) tr[l] = sqm * w2r[l];
      }
      for (int c = 0; c < k; ++c) {
        double* orow = omat.data() + static_cast<std::size_t>(c) * h;
        std::fill(orow, orow + h, 0.0);
        const double* br = bmat.data() + static_cast<std::size_t>(c) * h;
        for (int m = 0; m < h; ++m) {
          const double bv = br[m];
          const double* tr = tmp_hh.data() + static_cast<std::size_t>(m) * h;
          for (int l = 0; l < h; ++l) orow[l] += bv * tr[l];
        }
      }

      for (int g = 0; g < h; ++g) {
        double acc = 0.0;
        const double* er = eb + static_cast<std::size_t>(g) * k;
        for (int c = 0; c < k; ++c) acc += bmat[static_cast<std::size_t>(c) * h + g] * er[c];
        dq_direct[g] = wi * silu_d2(pe2[g]) * acc;
      }
      for (int l = 0; l < h; ++l) {
        double acc = 0.0;
        const double* w1r = w_e1.data() + static_cast<std::size_t>(l) * e_in;
        for (int c = 0; c < k; ++c) acc += w1r[c] * omat[static_cast<std::size_t>(c) * h + l];
        dp_direct[l] = wi * silu_d2(pe1[l]) * acc;
      }

      // Explicit W_e2 and W_e1 (z_i columns) terms.
      for (int m = 0; m < h; ++m) {
        const double scale = wi * sq[m];
        double* gw2r = g_w_e2.data() + static_cast<std::size_t>(m) * h;
        for (int l = 0; l < h; ++l) {
          gw2r[l] += scale * sp[l] * gmat[static_cast<std::size_t>(l) * h + m];
        }
      }
      for (int l = 0; l < h; ++l) {
        const double scale = wi * sp[l];
        double* gw1r = g_w_e1.data() + static_cast<std::size_t>(l) * e_in;
        for (int c = 0; c < k; ++c) {
          gw1r[c] += scale * omat[static_cast<std::size_t>(c) * h + l];
        }
      }

      // Chain through q and p.
      for (int g = 0; g < h; ++g) gq[g] = dq_direct[g] + silu_d1(pe2[g]) * gm[g];
      outer_add(g_w_e2, h, h, gq.data(), ae1);
      for (int g = 0; g < h; ++g) g_b_e2[g] += gq[g];

      std::fill(ghv.begin(), ghv.end(), 0.0);
      matvec_transposed_add(w_e2, h, h, gq.data(), ghv.data());
      for (int l = 0; l < h; ++l) gp[l] = dp_direct[l] + silu_d1(pe1[l]) * ghv[l];

      std::memcpy(u.data(), z.row(arc.dst), sizeof(double) * k);
      std::memcpy(u.data() + k, z.row(arc.src), sizeof(double) * k);
      u[2 * k] = arc.d2;
      for (int b = 0; b < params_->bond_arity; ++b) u[2 * k + 1 + b] = 0.0;
      u[2 * k + 1 + arc.bond] = 1.0;
      outer_add(g_w_e1, h, e_in, gp.data(), u.data());
      for (int l = 0; l < h; ++l) g_b_e1[l] += gp[l];

      double* gz_src = grad_z.row(arc.src);
      for (int l = 0; l < h; ++l) {
        const double* w1r = w_e1.data() + static_cast<std::size_t>(l) * e_in;
        const double gpl = gp[l];
        for (int c = 0; c < k; ++c) {
          gz_i[c] += gpl * w1r[c];
          gz_src[c] += gpl * w1r[k + c];
        }
      }
    }
  }
}

void EgnnDifferential::eval_with_coords(double t, const Matrix& z, const Matrix& x,
                                        Matrix& dz, Matrix& dx) const {
  const int k = params_->label_dim;
  const int h = params_->hidden_dim;
  const int e_in = params_->edge_in();
  const int h_in = params_->node_in();
  const int dim = x.cols;
  if (x.rows != graph_->num_nodes) {
    raise(ErrorCode::shape_mismatch, "coordinate rows do not match node count");
  }
  const auto w_e1 = params_->w_e1();
  const auto b_e1 = params_->b_e1();
  const auto w_e2 = params_->w_e2();
  const auto b_e2 = params_->b_e2();
  const auto w_h1 = params_->w_h1();
  const auto b_h1 = params_->b_h1();
  const auto w_h2 = params_->w_h2();
  const auto b_h2 = params_->b_h2();
  const auto w_x1 = params_->w_x1();
  const auto b_x1 = params_->b_x1();
  const auto w_x2 = params_->w_x2();
  const auto b_x2 = params_->b_x2();

  dz = Matrix(z.rows, z.cols);
  dx = Matrix(x.rows, x.cols);

  std::vector<double> u(e_in), p(h), hid(h), q(h), m(h), msum(h), v(h_in), r(h), s(h);
  std::vector<double> xh(h);
  for (int i = 0; i < graph_->num_nodes; ++i) {
    std::fill(msum.begin(), msum.end(), 0.0);
    double* dxr = dx.row(i);
    const int deg = graph_->arc_begin[i + 1] - graph_->arc_begin[i];
    for (int a = graph_->arc_begin[i]; a < graph_->arc_begin[i + 1]; ++a) {
      const GraphContext::Arc& arc = graph_->arcs[a];
      double d2 = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double diff = x(arc.dst, c) - x(arc.src, c);
        d2 += diff * diff;
      }
      std::memcpy(u.data(), z.row(arc.dst), sizeof(double) * k);
      std::memcpy(u.data() + k, z.row(arc.src), sizeof(double) * k);
      u[2 * k] = d2;
      for (int b = 0; b < params_->bond_arity; ++b) u[2 * k + 1 + b] = 0.0;
      u[2 * k + 1 + arc.bond] = 1.0;
      matvec(w_e1, h, e_in, u.data(), p.data());
      for (int c = 0; c < h; ++c) hid[c] = silu(p[c] + b_e1[c]);
      matvec(w_e2, h, h, hid.data(), q.data());
      for (int c = 0; c < h; ++c) m[c] = silu(q[c] + b_e2[c]);
      for (int c = 0; c < h; ++c) msum[c] += m[c];

      matvec(w_x1, h, h, m.data(), xh.data());
      for (int c = 0; c < h; ++c) xh[c] = silu(xh[c] + b_x1[c]);
      double gate = b_x2[0];
      for (int c = 0; c < h; ++c) gate += w_x2[c] * xh[c];
      for (int c = 0; c < dim; ++c) {
        dxr[c] += (x(arc.dst, c) - x(arc.src, c)) * gate;
      }
    }
    if (deg > 0) {
      for (int c = 0; c < dim; ++c) dxr[c] /= deg;
    }
    std::memcpy(v.data(), z.row(i), sizeof(double) * k);
    std::memcpy(v.data() + k, msum.data(), sizeof(double) * h);
    v[k + h] = t;
    matvec(w_h1, h, h_in, v.data(), r.data());
    for (int c = 0; c < h; ++c) s[c] = silu(r[c] + b_h1[c]);
    double* out = dz.row(i);
    matvec(w_h2, k, h, s.data(), out);
    for (int c = 0; c < k; ++c) out[c] += b_h2[c];
  }
}

}  // namespace modflow
