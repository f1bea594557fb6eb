#pragma once

#include <functional>
#include <span>
#include <vector>

namespace modflow {

struct SolverConfig {
  double rtol = 1e-5;
  double atol = 1e-5;
  double initial_step = 1e-2;  // trial size; <= 0 means span-based default
  long max_steps = 100000;     // attempted steps
  double t_start = 0.0;
  double t_end = 1.0;

  void validate() const;
};

struct StepStats {
  long nfe = 0;
  long accepted = 0;
  long rejected = 0;

  void merge(const StepStats& other) {
    nfe += other.nfe;
    accepted += other.accepted;
    rejected += other.rejected;
  }
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

// One embedded Dormand-Prince 5(4) trial step from (t, y) with size h.
// y5 receives the 5th-order solution, err the component-wise embedded error,
// k1 must hold f(t, y) on entry and k_last receives f(t+h, y5) (FSAL).
void dopri5_step(const OdeRhs& f, double t, double h, std::span<const double> y,
                 std::span<const double> k1, std::span<double> y5, std::span<double> err,
                 std::span<double> k_last, std::vector<double>& work);

// Adaptive integration from cfg.t_start to cfg.t_end (either direction).
// Error per step controlled by atol + rtol * |y|, acceptance factor safety
// 0.9, growth clamped to [0.2, 5.0]. Throws max_steps_exceeded,
// step_underflow or non_finite.
void dopri5_integrate(const OdeRhs& f, std::vector<double>& y, const SolverConfig& cfg,
                      StepStats* stats = nullptr);

}  // namespace modflow
