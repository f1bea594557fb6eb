#include "modflow/flow_integrals.hpp"

#include <cmath>
#include <cstring>

#include "modflow/errors.hpp"

namespace modflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Runs the augmented (z, logdet) system between two times. The logdet
// component integrates -tr when moving toward larger t and +tr when moving
// toward smaller t, which keeps the stored quantity equal to
// -int_{t_start}^{t_end} tr dt along the canonical orientation.
AugmentedState run_logdet_pass(const Differential& f, const Matrix& z_in, double t_from,
                               double t_to, const SolverConfig& cfg, StepStats* stats) {
  const int m = f.num_nodes();
  const int k = f.label_dim();
  if (z_in.rows != m || z_in.cols != k) {
    raise(ErrorCode::shape_mismatch, "state shape does not match the differential");
  }
  const double trace_sign = t_to > t_from ? -1.0 : 1.0;
  const std::size_t zn = z_in.a.size();

  Matrix z_work(m, k), dz_work(m, k);
  std::vector<double> tr_work(m);

  std::vector<double> y(zn + m, 0.0);
  std::memcpy(y.data(), z_in.a.data(), sizeof(double) * zn);

  OdeRhs rhs = [&](double t, std::span<const double> state, std::span<double> dstate) {
    std::memcpy(z_work.a.data(), state.data(), sizeof(double) * zn);
    f.eval(t, z_work, dz_work);
    f.trace(t, z_work, tr_work);
    std::memcpy(dstate.data(), dz_work.a.data(), sizeof(double) * zn);
    for (int i = 0; i < m; ++i) dstate[zn + i] = trace_sign * tr_work[i];
  };

  SolverConfig run = cfg;
  run.t_start = t_from;
  run.t_end = t_to;
  dopri5_integrate(rhs, y, run, stats);

  AugmentedState out;
  out.z = Matrix(m, k);
  std::memcpy(out.z.a.data(), y.data(), sizeof(double) * zn);
  out.logdet.assign(y.begin() + zn, y.end());
  return out;
}

}  // namespace

AugmentedState integrate_forward_logdet(const Differential& f, const Matrix& z_start,
                                        const SolverConfig& cfg, StepStats* stats) {
  return run_logdet_pass(f, z_start, cfg.t_start, cfg.t_end, cfg, stats);
}

AugmentedState integrate_reverse_logdet(const Differential& f, const Matrix& z_end,
                                        const SolverConfig& cfg, StepStats* stats) {
  return run_logdet_pass(f, z_end, cfg.t_end, cfg.t_start, cfg, stats);
}

Matrix integrate_states(const Differential& f, const Matrix& z_in, double t_from,
                        double t_to, const SolverConfig& cfg, StepStats* stats) {
  const int m = f.num_nodes();
  const int k = f.label_dim();
  if (z_in.rows != m || z_in.cols != k) {
    raise(ErrorCode::shape_mismatch, "state shape does not match the differential");
  }
  Matrix z_work(m, k), dz_work(m, k);
  std::vector<double> y(z_in.a);
  OdeRhs rhs = [&](double t, std::span<const double> state, std::span<double> dstate) {
    std::memcpy(z_work.a.data(), state.data(), sizeof(double) * state.size());
    f.eval(t, z_work, dz_work);
    std::memcpy(dstate.data(), dz_work.a.data(), sizeof(double) * dstate.size());
  };
  SolverConfig run = cfg;
  run.t_start = t_from;
  run.t_end = t_to;
  dopri5_integrate(rhs, y, run, stats);
  Matrix out(m, k);
  out.a = std::move(y);
  return out;
}

AdjointResult adjoint_gradient(const Differential& f, const Matrix& z_at_loss_end,
                               double t_far, double t_loss, const Matrix& dloss_dz,
                               std::span<const double> dloss_dlogdet,
                               const SolverConfig& cfg, StepStats* stats) {
  const int m = f.num_nodes();
  const int k = f.label_dim();
  const std::size_t zn = static_cast<std::size_t>(m) * k;
  const std::size_t p = f.param_count();
  if (dloss_dlogdet.size() != static_cast<std::size_t>(m)) {
    raise(ErrorCode::shape_mismatch, "one logdet cotangent per node required");
  }

  // The primal logdet dynamics carried -tr toward larger t, +tr toward
  // smaller t; its contribution to the costate keeps that sign.
  const double primal_dir = t_loss > t_far ? 1.0 : -1.0;
  const double trace_sign = primal_dir > 0.0 ? -1.0 : 1.0;

  bool logdet_active = false;
  std::vector<double> trace_weights(m, 0.0);
  for (int i = 0; i < m; ++i) {
    trace_weights[i] = trace_sign * dloss_dlogdet[i];
    if (trace_weights[i] != 0.0) logdet_active = true;
  }

  Matrix z_work(m, k), dz_work(m, k), cot_work(m, k), gz_work(m, k), gz_tr(m, k);
  std::vector<double> gp_work(p), gp_tr(p);

  // Combined backward state: [z | costate | parameter quadrature].
  std::vector<double> y(2 * zn + p, 0.0);
  std::memcpy(y.data(), z_at_loss_end.a.data(), sizeof(double) * zn);
  std::memcpy(y.data() + zn, dloss_dz.a.data(), sizeof(double) * zn);

  OdeRhs rhs = [&](double t, std::span<const double> state, std::span<double> dstate) {
    std::memcpy(z_work.a.data(), state.data(), sizeof(double) * zn);
    std::memcpy(cot_work.a.data(), state.data() + zn, sizeof(double) * zn);

    f.eval(t, z_work, dz_work);
    f.vjp(t, z_work, cot_work, gz_work, gp_work);
    if (logdet_active) {
      f.trace_gradient(t, z_work, trace_weights, gz_tr, gp_tr);
      for (std::size_t i = 0; i < zn; ++i) gz_work.a[i] += gz_tr.a[i];
      for (std::size_t i = 0; i < p; ++i) gp_work[i] += gp_tr[i];
    }
    std::memcpy(dstate.data(), dz_work.a.data(), sizeof(double) * zn);
    for (std::size_t i = 0; i < zn; ++i) dstate[zn + i] = -gz_work.a[i];
    for (std::size_t i = 0; i < p; ++i) dstate[2 * zn + i] = -gp_work[i];
  };

  SolverConfig run = cfg;
  run.t_start = t_loss;
  run.t_end = t_far;
  dopri5_integrate(rhs, y, run, stats);

  AdjointResult out;
  out.z_far = Matrix(m, k);
  out.grad_z_far = Matrix(m, k);
  std::memcpy(out.z_far.a.data(), y.data(), sizeof(double) * zn);
  std::memcpy(out.grad_z_far.a.data(), y.data() + zn, sizeof(double) * zn);
  out.grad_params.assign(y.begin() + 2 * zn, y.end());
  return out;
}

double gaussian_log_density(std::span<const double> row) {
  double ss = 0.0;
  for (double v : row) ss += v * v;
  return -0.5 * (ss + static_cast<double>(row.size()) * kLog2Pi);
}

}  // namespace modflow
