#pragma once

#include <span>
#include <vector>

#include "modflow/differential.hpp"
#include "modflow/linalg.hpp"
#include "modflow/ode.hpp"

namespace modflow {

// Scores plus the per-node accumulated density change. The logdet entries
// always satisfy log p_data_side = sum_i log N(z_i at base side; 0, I)
// + sum_i logdet_i, no matter which direction produced them.
struct AugmentedState {
  Matrix z;
  std::vector<double> logdet;
};

// Base side (t_start) to data side (t_end), logdet accumulated jointly.
AugmentedState integrate_forward_logdet(const Differential& f, const Matrix& z_start,
                                        const SolverConfig& cfg, StepStats* stats = nullptr);

// Data side (t_end) back to the base side (t_start).
AugmentedState integrate_reverse_logdet(const Differential& f, const Matrix& z_end,
                                        const SolverConfig& cfg, StepStats* stats = nullptr);

// State-only integration between two times (generation path).
Matrix integrate_states(const Differential& f, const Matrix& z_in, double t_from,
                        double t_to, const SolverConfig& cfg, StepStats* stats = nullptr);

struct AdjointResult {
  std::vector<double> grad_params;  // dLoss/dparams
  Matrix grad_z_far;                // dLoss/dz at the start of the primal pass
  Matrix z_far;                     // reconstructed state there
};

// Adjoint sensitivity for a loss evaluated at the end of a primal pass that
// ran from t_far to t_loss with joint logdet accumulation. The state is
// re-integrated backward alongside the costate and the parameter-gradient
// quadrature, so no trajectory storage is needed. The costate of each node
// couples only to its graph neighborhood through the differential's VJP.
AdjointResult adjoint_gradient(const Differential& f, const Matrix& z_at_loss_end,
                               double t_far, double t_loss, const Matrix& dloss_dz,
                               std::span<const double> dloss_dlogdet,
                               const SolverConfig& cfg, StepStats* stats = nullptr);

double gaussian_log_density(std::span<const double> row);

}  // namespace modflow
