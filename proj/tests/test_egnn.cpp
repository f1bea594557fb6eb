#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "modflow/egnn.hpp"
#include "modflow/rng.hpp"
#include "support/test_util.hpp"

using namespace modflow;
using namespace modflow::testing;

namespace {

struct Instance {
  LabeledGraph graph;
  std::vector<double> coords;
  GraphContext ctx;
  EgnnParams params;
  Matrix z;

  Instance(int nodes, int k, std::uint64_t seed)
      : graph(path_graph(nodes, k, seed)),
        coords(graph.coords),
        ctx(graph, coords, 2),
        params(init_params(seed + 1, k)),
        z(random_scores(nodes, k, seed + 2)) {}
};

// Reference per-node trace via K masked directional-derivative passes: for
// each label direction, only the receiving node's own tangent is propagated.
std::vector<double> trace_by_directional_passes(const EgnnParams& params,
                                                const GraphContext& ctx, double t,
                                                const Matrix& z, double h = 1e-6) {
  const int m = ctx.num_nodes;
  const int k = params.label_dim;
  EgnnDifferential diff(params, ctx);
  std::vector<double> out(m, 0.0);
  // Finite-difference flavor of the masked pass: perturb one node at a time
  // (other nodes' tangents are zero by construction).
  Matrix zp = z, f_up(m, k), f_down(m, k);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < k; ++c) {
      const double saved = zp(i, c);
      zp(i, c) = saved + h;
      diff.eval(t, zp, f_up);
      zp(i, c) = saved - h;
      diff.eval(t, zp, f_down);
      zp(i, c) = saved;
      out[i] += (f_up(i, c) - f_down(i, c)) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("init_params is deterministic and shaped by the alphabet") {
  const EgnnParams a = init_params(42, 5);
  const EgnnParams b = init_params(42, 5);
  const EgnnParams c = init_params(43, 5);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.w_h2().size() == 5u * 32u);
  CHECK(a.b_h2().size() == 5u);
  CHECK(a.count() == EgnnParams::count_for(5));
  for (double v : a.b_e1()) CHECK(v == 0.0);
  CHECK_THROWS(init_params(1, 1));
}

TEST_CASE("isolated node sees an empty message sum") {
  LabeledGraph g;
  g.num_nodes = 1;
  g.labels = {0};
  g.coord_dim = 2;
  g.coords = {0.4, -0.3};

  const EgnnParams params = init_params(3, 4);
  GraphContext ctx_a(g, g.coords, 2);
  Matrix z = random_scores(1, 4, 9);
  Matrix dz_a;
  EgnnDifferential(params, ctx_a).eval(0.3, z, dz_a);

  g.coords = {5.0, 7.0};  // position must not matter without neighbors
  GraphContext ctx_b(g, g.coords, 2);
  Matrix dz_b;
  EgnnDifferential(params, ctx_b).eval(0.3, z, dz_b);
  CHECK(dz_a.a == dz_b.a);
}

TEST_CASE("permutation equivariance is exact") {
  const int m = 5, k = 3;
  Instance inst(m, k, 100);
  EgnnDifferential diff(inst.params, inst.ctx);
  Matrix dz;
  diff.eval(0.5, inst.z, dz);

  Rng rng(77);
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(perm);
    const LabeledGraph pg = permute_graph(inst.graph, perm);
    GraphContext pctx(pg, pg.coords, 2);
    Matrix pz(m, k);
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < k; ++c) pz(i, c) = inst.z(perm[i], c);
    }
    Matrix pdz;
    EgnnDifferential(inst.params, pctx).eval(0.5, pz, pdz);
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < k; ++c) {
        CHECK(pdz(i, c) == dz(perm[i], c));  // bitwise
      }
    }
  }
}

TEST_CASE("rigid motions of the coordinates leave dz unchanged") {
  const int m = 6, k = 3;
  Instance inst(m, k, 200);
  EgnnDifferential diff(inst.params, inst.ctx);
  Matrix dz;
  diff.eval(0.2, inst.z, dz);

  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double tx = rng.uniform(-3.0, 3.0), ty = rng.uniform(-3.0, 3.0);
    const double sign = rng.next_double() < 0.5 ? 1.0 : -1.0;  // reflection
    std::vector<double> moved(inst.coords.size());
    for (int i = 0; i < m; ++i) {
      const double x = inst.coords[2 * i], y = inst.coords[2 * i + 1];
      moved[2 * i] = std::cos(angle) * x - std::sin(angle) * y + tx;
      moved[2 * i + 1] = sign * (std::sin(angle) * x + std::cos(angle) * y) + ty;
    }
    GraphContext mctx(inst.graph, moved, 2);
    Matrix mdz;
    EgnnDifferential(inst.params, mctx).eval(0.2, inst.z, mdz);
    for (std::size_t i = 0; i < dz.a.size(); ++i) {
      CHECK(std::abs(mdz.a[i] - dz.a[i]) < 1e-12);
    }
  }
}

TEST_CASE("vjp matches finite differences on a small instance") {
  const int m = 4, k = 3;
  Instance inst(m, k, 300);
  EgnnDifferential diff(inst.params, inst.ctx);

  const Matrix w = random_scores(m, k, 301);
  Matrix grad_z;
  std::vector<double> grad_p(inst.params.count());
  diff.vjp(0.7, inst.z, w, grad_z, grad_p);

  auto weighted_sum = [&] {
    Matrix f;
    EgnnDifferential d(inst.params, inst.ctx);
    d.eval(0.7, inst.z, f);
    return dot(std::span<const double>(w.a), std::span<const double>(f.a));
  };

  std::vector<double> fd_p(inst.params.count());
  for (std::size_t j = 0; j < inst.params.count(); ++j) {
    fd_p[j] = central_diff(weighted_sum, &inst.params.values[j], 1e-5);
  }
  const GradCheck pc = compare_gradients(grad_p, fd_p, 1e-4);
  INFO("worst param ", pc.worst, " rel ", pc.max_rel);
  CHECK(pc.max_rel < 1e-4);

  std::vector<double> fd_z(inst.z.a.size());
  for (std::size_t j = 0; j < inst.z.a.size(); ++j) {
    fd_z[j] = central_diff(weighted_sum, &inst.z.a[j], 1e-5);
  }
  const GradCheck zc = compare_gradients(grad_z.a, fd_z, 1e-4);
  INFO("worst z ", zc.worst, " rel ", zc.max_rel);
  CHECK(zc.max_rel < 1e-4);
}

TEST_CASE("vjp is linear in the cotangent") {
  const int m = 5, k = 4;
  Instance inst(m, k, 400);
  EgnnDifferential diff(inst.params, inst.ctx);
  const Matrix w1 = random_scores(m, k, 401);
  const Matrix w2 = random_scores(m, k, 402);
  Matrix w12(m, k);
  for (std::size_t i = 0; i < w12.a.size(); ++i) w12.a[i] = w1.a[i] + w2.a[i];

  Matrix g1, g2, g12;
  std::vector<double> p1(inst.params.count()), p2(inst.params.count()),
      p12(inst.params.count());
  diff.vjp(0.1, inst.z, w1, g1, p1);
  diff.vjp(0.1, inst.z, w2, g2, p2);
  diff.vjp(0.1, inst.z, w12, g12, p12);
  for (std::size_t i = 0; i < g12.a.size(); ++i) {
    CHECK(std::abs(g12.a[i] - g1.a[i] - g2.a[i]) < 1e-12);
  }
  for (std::size_t i = 0; i < p12.size(); ++i) {
    CHECK(std::abs(p12[i] - p1[i] - p2[i]) < 1e-12);
  }

  // Zero cotangent gives exactly zero gradients.
  Matrix zero_w(m, k), gz;
  std::vector<double> pz(inst.params.count());
  diff.vjp(0.1, inst.z, zero_w, gz, pz);
  for (double v : gz.a) CHECK(v == 0.0);
  for (double v : pz) CHECK(v == 0.0);
}

TEST_CASE("non-neighbor perturbations leave a node's output exactly unchanged") {
  // Path 0-1-2-3: node 3 is not adjacent to node 0 or 1.
  const int m = 4, k = 3;
  Instance inst(m, k, 500);
  EgnnDifferential diff(inst.params, inst.ctx);
  Matrix f0;
  diff.eval(0.4, inst.z, f0);

  Matrix z2 = inst.z;
  z2(3, 1) += 0.37;  // perturb a non-neighbor of nodes 0 and 1
  Matrix f1;
  diff.eval(0.4, z2, f1);
  for (int c = 0; c < k; ++c) {
    CHECK(f1(0, c) == f0(0, c));
    CHECK(f1(1, c) == f0(1, c));
  }
  // Neighbor of 3 does change.
  bool changed = false;
  for (int c = 0; c < k; ++c) changed = changed || f1(2, c) != f0(2, c);
  CHECK(changed);
}

TEST_CASE("trace matches finite differences and directional passes") {
  const int m = 4, k = 3;
  Instance inst(m, k, 600);
  EgnnDifferential diff(inst.params, inst.ctx);

  std::vector<double> tr(m);
  diff.trace(0.6, inst.z, tr);

  const std::vector<double> fd = trace_by_directional_passes(inst.params, inst.ctx, 0.6, inst.z);
  for (int i = 0; i < m; ++i) {
    CHECK(rel_err(tr[i], fd[i], 1e-6) < 1e-5);
  }
}

TEST_CASE("trace equals the diagonal of the dense jacobian from vjps") {
  const int m = 3, k = 4;
  Instance inst(m, k, 700);
  EgnnDifferential diff(inst.params, inst.ctx);

  std::vector<double> tr(m);
  diff.trace(0.9, inst.z, tr);

  // Dense Jacobian row by row: cotangent = basis vector per output entry.
  std::vector<double> diag_sum(m, 0.0);
  Matrix grad_z;
  std::vector<double> grad_p(inst.params.count());
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < k; ++c) {
      Matrix e(m, k);
      e(i, c) = 1.0;
      diff.vjp(0.9, inst.z, e, grad_z, grad_p);
      diag_sum[i] += grad_z(i, c);
    }
  }
  for (int i = 0; i < m; ++i) CHECK(std::abs(tr[i] - diag_sum[i]) < 1e-10);
}

TEST_CASE("constant differential has zero traces") {
  Instance inst(4, 3, 800);
  for (double& v : inst.params.w_h2()) v = 0.0;
  for (double& v : inst.params.b_h2()) v = 1.3;  // constant output
  EgnnDifferential diff(inst.params, inst.ctx);
  std::vector<double> tr(4);
  diff.trace(0.5, inst.z, tr);
  for (double v : tr) CHECK(v == 0.0);
}

TEST_CASE("linear-in-z field reproduces tr(A) per node") {
  // phi_h with identity-free hidden layer is hard to force linear, so use the
  // shared linear reference differential instead.
  const int m = 3, k = 4;
  const LinearDifferential lin = LinearDifferential::random(m, k, 900);
  const Matrix z = random_scores(m, k, 901);
  std::vector<double> tr(m);
  lin.trace(0.0, z, tr);
  for (int i = 0; i < m; ++i) CHECK(tr[i] == doctest::Approx(lin.trace_value()));
}

TEST_CASE("trace gradient matches finite differences of the weighted trace") {
  const int m = 4, k = 3;
  Instance inst(m, k, 1000);
  EgnnDifferential diff(inst.params, inst.ctx);

  Rng rng(1001);
  std::vector<double> weights(m);
  for (double& w : weights) w = rng.uniform(-1.0, 1.0);

  Matrix grad_z;
  std::vector<double> grad_p(inst.params.count());
  diff.trace_gradient(0.3, inst.z, weights, grad_z, grad_p);

  auto weighted_trace = [&] {
    EgnnDifferential d(inst.params, inst.ctx);
    std::vector<double> tr(m);
    d.trace(0.3, inst.z, tr);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += weights[i] * tr[i];
    return acc;
  };

  std::vector<double> fd_p(inst.params.count());
  for (std::size_t j = 0; j < inst.params.count(); ++j) {
    fd_p[j] = central_diff(weighted_trace, &inst.params.values[j], 1e-5);
  }
  const GradCheck pc = compare_gradients(grad_p, fd_p, 1e-4, 1e-6);
  INFO("worst param ", pc.worst, " rel ", pc.max_rel);
  CHECK(pc.max_rel < 2e-4);

  std::vector<double> fd_z(inst.z.a.size());
  for (std::size_t j = 0; j < inst.z.a.size(); ++j) {
    fd_z[j] = central_diff(weighted_trace, &inst.z.a[j], 1e-5);
  }
  const GradCheck zc = compare_gradients(grad_z.a, fd_z, 1e-4, 1e-6);
  INFO("worst z ", zc.worst, " rel ", zc.max_rel);
  CHECK(zc.max_rel < 2e-4);
}

TEST_CASE("trace gradient handles a larger tree-sized label space") {
  const int m = 3, k = 9;
  Instance inst(m, k, 1100);
  EgnnDifferential diff(inst.params, inst.ctx);
  std::vector<double> weights(m, -1.0);

  Matrix grad_z;
  std::vector<double> grad_p(inst.params.count());
  diff.trace_gradient(0.8, inst.z, weights, grad_z, grad_p);

  auto weighted_trace = [&] {
    EgnnDifferential d(inst.params, inst.ctx);
    std::vector<double> tr(m);
    d.trace(0.8, inst.z, tr);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += weights[i] * tr[i];
    return acc;
  };
  // Spot-check a sample of parameters across all sections.
  Rng rng(1101);
  for (int probe = 0; probe < 200; ++probe) {
    const std::size_t j = rng.next_below(inst.params.count());
    const double fd = central_diff(weighted_trace, &inst.params.values[j], 1e-5);
    CHECK(rel_err(grad_p[j], fd, 1e-6) < 3e-4);
  }
}

TEST_CASE("coordinate co-evolution produces finite velocities") {
  const int m = 4, k = 3;
  Instance inst(m, k, 1200);
  EgnnDifferential diff(inst.params, inst.ctx);
  Matrix x(m, 2);
  std::memcpy(x.a.data(), inst.coords.data(), sizeof(double) * x.a.size());
  Matrix dz, dx;
  diff.eval_with_coords(0.5, inst.z, x, dz, dx);
  CHECK(all_finite(dz));
  CHECK(all_finite(dx));
  // With the static coordinates the z-velocity matches the standard path.
  Matrix dz_ref;
  diff.eval(0.5, inst.z, dz_ref);
  for (std::size_t i = 0; i < dz.a.size(); ++i) {
    CHECK(dz.a[i] == doctest::Approx(dz_ref.a[i]).epsilon(1e-12));
  }
}
