#pragma once

#include <span>

#include "modflow/linalg.hpp"

namespace modflow {

// Time-dependent vector field over per-node score rows, together with the
// analytic derivatives the adjoint integration consumes. Implementations own
// whatever scratch they need; a single instance is not safe to share across
// threads mid-evaluation.
class Differential {
 public:
  virtual ~Differential() = default;

  virtual int num_nodes() const = 0;
  virtual int label_dim() const = 0;
  virtual std::size_t param_count() const = 0;

  // dz = f(t, z). Writes all rows.
  virtual void eval(double t, const Matrix& z, Matrix& dz) const = 0;

  // Per-node trace of the diagonal Jacobian block d f_i / d z_i.
  virtual void trace(double t, const Matrix& z, std::span<double> out) const = 0;

  // Reverse-mode products for a cotangent w: grad_z = w^T df/dz and
  // grad_params = w^T df/dparams. Both outputs are overwritten.
  virtual void vjp(double t, const Matrix& z, const Matrix& cotangent, Matrix& grad_z,
                   std::span<double> grad_params) const = 0;

  // Gradient of sum_i weights[i] * trace_i with respect to z and params.
  // Both outputs are overwritten.
  virtual void trace_gradient(double t, const Matrix& z, std::span<const double> weights,
                              Matrix& grad_z, std::span<double> grad_params) const = 0;
};

}  // namespace modflow
