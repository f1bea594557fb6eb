#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modflow/differential.hpp"
#include "modflow/graph.hpp"
#include "modflow/linalg.hpp"

namespace modflow {

// Weights of the message-passing differential: an edge perceptron phi_e over
// (z_i, z_j, squared distance, bond one-hot), a node perceptron phi_h over
// (z_i, aggregated message, t), and the coordinate head phi_x used only by
// the experimental coordinate flow. Stored as one flat vector so the
// optimizer, checkpoints and finite-difference tests index a single array.
struct EgnnParams {
  int label_dim = 0;   // K
  int hidden_dim = 32; // H
  int bond_arity = 3;
  std::vector<double> values;

  int edge_in() const { return 2 * label_dim + 1 + bond_arity; }
  int node_in() const { return label_dim + hidden_dim + 1; }

  std::size_t count() const { return values.size(); }
  static std::size_t count_for(int label_dim, int hidden_dim = 32, int bond_arity = 3);

  // Section views over the flat storage, in layout order.
  std::span<double> w_e1();
  std::span<double> b_e1();
  std::span<double> w_e2();
  std::span<double> b_e2();
  std::span<double> w_h1();
  std::span<double> b_h1();
  std::span<double> w_h2();
  std::span<double> b_h2();
  std::span<double> w_x1();
  std::span<double> b_x1();
  std::span<double> w_x2();
  std::span<double> b_x2();
  std::span<const double> w_e1() const;
  std::span<const double> b_e1() const;
  std::span<const double> w_e2() const;
  std::span<const double> b_e2() const;
  std::span<const double> w_h1() const;
  std::span<const double> b_h1() const;
  std::span<const double> w_h2() const;
  std::span<const double> b_h2() const;
  std::span<const double> w_x1() const;
  std::span<const double> b_x1() const;
  std::span<const double> w_x2() const;
  std::span<const double> b_x2() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
EgnnParams init_params(std::uint64_t seed, int label_dim, int bond_arity = 3,
                       int hidden_dim = 32);

// Static per-molecule structure: directed arcs grouped by receiving node,
// with squared distances and bond one-hot indices precomputed.
struct GraphContext {
  struct Arc {
    int dst = 0;   // receiving node i
    int src = 0;   // neighbor j
    double d2 = 0; // squared distance between the two
    int bond = 0;  // bond order - 1
  };

  int num_nodes = 0;
  std::vector<Arc> arcs;       // sorted by (dst, src)
  std::vector<int> arc_begin;  // size num_nodes + 1

  GraphContext() = default;
  // Coordinates are required here; callers apply the layout fallback first.
  GraphContext(const LabeledGraph& graph, std::span<const double> coords, int coord_dim);
};

class EgnnDifferential final : public Differential {
 public:
  EgnnDifferential(const EgnnParams& params, const GraphContext& graph);

  int num_nodes() const override { return graph_->num_nodes; }
  int label_dim() const override { return params_->label_dim; }
  std::size_t param_count() const override { return params_->count(); }

  void eval(double t, const Matrix& z, Matrix& dz) const override;
  void trace(double t, const Matrix& z, std::span<double> out) const override;
  void vjp(double t, const Matrix& z, const Matrix& cotangent, Matrix& grad_z,
           std::span<double> grad_params) const override;
  void trace_gradient(double t, const Matrix& z, std::span<const double> weights,
                      Matrix& grad_z, std::span<double> grad_params) const override;

  // Experimental coordinate flow: messages recomputed from the live
  // coordinates, dx_i = mean over neighbors of (x_i - x_j) * phi_x(m_ij).
  // Carries no density terms.
  void eval_with_coords(double t, const Matrix& z, const Matrix& x, Matrix& dz,
                        Matrix& dx) const;

 private:
  void forward_pass(double t, const Matrix& z) const;

  const EgnnParams* params_;
  const GraphContext* graph_;

  // Cached activations from forward_pass, one row per arc / node.
  mutable std::vector<double> pre_e1_, act_e1_, pre_e2_, msg_;
  mutable std::vector<double> msum_, pre_h1_, act_h1_;
  // Reused hot-path scratch (trace runs once per solver stage).
  mutable std::vector<double> kappa_, sp_, sq_, col_, ccols_, xt_;
};

}  // namespace modflow
