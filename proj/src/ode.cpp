#include "modflow/ode.hpp"

#include <algorithm>
#include <cmath>

#include "modflow/errors.hpp"
#include "modflow/linalg.hpp"

namespace modflow {

void SolverConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) {
    raise(ErrorCode::invalid_argument, "solver tolerances must be positive");
  }
  if (max_steps < 1) raise(ErrorCode::invalid_argument, "max_steps must be >= 1");
  if (t_start == t_end) raise(ErrorCode::invalid_argument, "empty integration interval");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                 kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
// Error weights: 5th-order minus embedded 4th-order coefficients.
constexpr double kE1 = 35.0 / 384 - 5179.0 / 57600;
constexpr double kE3 = 500.0 / 1113 - 7571.0 / 16695;
constexpr double kE4 = 125.0 / 192 - 393.0 / 640;
constexpr double kE5 = -2187.0 / 6784 + 92097.0 / 339200;
constexpr double kE6 = 11.0 / 84 - 187.0 / 2100;
constexpr double kE7 = -1.0 / 40;

}  // namespace

void dopri5_step(const OdeRhs& f, double t, double h, std::span<const double> y,
                 std::span<const double> k1, std::span<double> y5, std::span<double> err,
                 std::span<double> k_last, std::vector<double>& work) {
  const std::size_t n = y.size();
  work.resize(6 * n);
  double* k2 = work.data();
  double* k3 = k2 + n;
  double* k4 = k3 + n;
  double* k5 = k4 + n;
  double* k6 = k5 + n;
  double* yt = k6 + n;

  for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * kA21 * k1[i];
  f(t + kC2 * h, std::span<const double>(yt, n), std::span<double>(k2, n));

  for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
  f(t + kC3 * h, std::span<const double>(yt, n), std::span<double>(k3, n));

  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
  }
  f(t + kC4 * h, std::span<const double>(yt, n), std::span<double>(k4, n));

  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
  }
  f(t + kC5 * h, std::span<const double>(yt, n), std::span<double>(k5, n));

  for (std::size_t i = 0; i < n; ++i) {
    yt[i] = y[i] +
            h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] + kA65 * k5[i]);
  }
  f(t + h, std::span<const double>(yt, n), std::span<double>(k6, n));

  for (std::size_t i = 0; i < n; ++i) {
    y5[i] = y[i] +
            h * (kA71 * k1[i] + kA73 * k3[i] + kA74 * k4[i] + kA75 * k5[i] + kA76 * k6[i]);
  }
  f(t + h, std::span<const double>(y5.data(), n), k_last);

  for (std::size_t i = 0; i < n; ++i) {
    err[i] = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] + kE6 * k6[i] +
                  kE7 * k_last[i]);
  }
}

void dopri5_integrate(const OdeRhs& f, std::vector<double>& y, const SolverConfig& cfg,
                      StepStats* stats) {
  cfg.validate();
  const std::size_t n = y.size();
  const double span = cfg.t_end - cfg.t_start;
  const double dir = span > 0.0 ? 1.0 : -1.0;
  const double h_min = 1e-12 * std::abs(span);

  StepStats local;
  std::vector<double> k1(n), k_last(n), y5(n), err(n), work;

  double t = cfg.t_start;
  f(t, y, std::span<double>(k1));
  ++local.nfe;
  if (!all_finite(std::span<const double>(k1))) {
    raise(ErrorCode::non_finite, "differential non-finite at the initial state");
  }

  double h = cfg.initial_step > 0.0 ? std::min(cfg.initial_step, std::abs(span))
                                    : std::abs(span);
  {
    // With a zero field the local scale gives no information; try the whole
    // interval and let the error estimate arbitrate.
    double norm = 0.0;
    for (double v : k1) norm += v * v;
    if (norm == 0.0) h = std::abs(span);
  }
  h *= dir;

  bool last_failure_nonfinite = false;
  for (long attempt = 0; attempt < cfg.max_steps; ++attempt) {
    if (std::abs(h) < h_min) {
      if (last_failure_nonfinite) {
        raise(ErrorCode::non_finite, "state became non-finite during integration");
      }
      raise(ErrorCode::step_underflow, "step size underflow");
    }
    // Clamp to hit the endpoint exactly.
    if ((t + h - cfg.t_end) * dir > 0.0) h = cfg.t_end - t;

    dopri5_step(f, t, h, y, k1, y5, err, std::span<double>(k_last), work);
    local.nfe += 6;

    bool finite = all_finite(std::span<const double>(y5)) &&
                  all_finite(std::span<const double>(k_last));
    double err_norm = 0.0;
    if (finite) {
      for (std::size_t i = 0; i < n; ++i) {
        const double scale = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        const double e = err[i] / scale;
        err_norm += e * e;
      }
      err_norm = std::sqrt(err_norm / static_cast<double>(n));
      if (!std::isfinite(err_norm)) finite = false;
    }

    if (finite && err_norm <= 1.0) {
      ++local.accepted;
      t += h;
      std::copy(y5.begin(), y5.end(), y.begin());
      std::copy(k_last.begin(), k_last.end(), k1.begin());
      last_failure_nonfinite = false;
      if (t == cfg.t_end || (cfg.t_end - t) * dir <= 0.0) {
        if (stats) stats->merge(local);
        return;
      }
      const double factor =
          err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      h *= factor;
    } else {
      ++local.rejected;
      last_failure_nonfinite = !finite;
      const double factor =
          finite ? std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 1.0) : 0.2;
      h *= factor;
    }
  }
  raise(ErrorCode::max_steps_exceeded, "solver exceeded the configured step budget");
}

}  // namespace modflow
