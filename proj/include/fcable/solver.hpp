#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcable/basis.hpp"
#include "fcable/cq.hpp"
#include "fcable/kernel.hpp"
#include "fcable/model.hpp"
#include "fcable/noise.hpp"
#include "fcable/parallel.hpp"

namespace fcable {

/// Spectral coefficients of the discrete solution. Row r holds the
/// coefficients at solver step recorded_steps[r]; with full recording that
/// is simply step r. Row 0 is the (zero) initial data.
struct SpectralTrajectory {
  Basis basis;
  double tau = 0.0;
  std::vector<std::size_t> recorded_steps;
  Matrix coeffs;
};

/// Per-mode implicit-step data: denominators D_k = 1/tau + lambda
/// d0^{(1-beta)} + mu rho_k^s d0^{(1-alpha)} (positive, strictly increasing
/// in k) together with the coefficients lambda and mu rho_k^s needed to
/// scale the memory sums.
struct StepDenominators {
  std::vector<double> values;
  std::vector<double> mu_rho_s;
  double lambda = 0.0;
  double inv_tau = 0.0;
};

inline StepDenominators make_denominators(const ModelParams& p, const Basis& basis,
                                          double tau, const CqWeights& weights_beta,
                                          const CqWeights& weights_alpha) {
  if (!(tau > 0.0)) throw std::invalid_argument("make_denominators: tau must be positive");
  StepDenominators d;
  d.lambda = p.lambda;
  d.inv_tau = 1.0 / tau;
  d.values.resize(basis.n_modes);
  d.mu_rho_s.resize(basis.n_modes);
  for (std::size_t k = 0; k < basis.n_modes; ++k) {
    d.mu_rho_s[k] = p.mu * std::pow(basis.eigenvalues[k], p.s);
    d.values[k] = d.inv_tau + p.lambda * weights_beta.d[0] +
                  d.mu_rho_s[k] * weights_alpha.d[0];
    if (!(d.values[k] > 0.0) || (k > 0 && !(d.values[k] > d.values[k - 1])))
      throw std::runtime_error("make_denominators: denominators must be positive and increasing");
  }
  return d;
}

/// Advances one implicit backward-Euler step of the fully discrete scheme,
/// writing row n of the trajectory and returning it.
///
/// Rows 1..n-1 must already be computed and the trajectory fully recorded.
/// The memory sums run over lags 1..n-1, so row 0 (zero initial data) never
/// enters them; lag 0 is the implicit unknown absorbed into D_k. forcing_n
/// is the projected forcing at step n and f_of_prev the nonlinearity
/// evaluated at row n-1.
inline std::vector<double> step(SpectralTrajectory& traj, std::size_t n,
                                const CqWeights& weights_beta,
                                const CqWeights& weights_alpha,
                                const StepDenominators& denominators,
                                const std::vector<double>& forcing_n,
                                const std::vector<double>& f_of_prev) {
  const std::size_t n_modes = traj.basis.n_modes;
  if (n < 1 || n >= traj.coeffs.rows)
    throw std::invalid_argument("step: step index outside trajectory");
  if (traj.recorded_steps.size() != traj.coeffs.rows)
    throw std::invalid_argument("step: trajectory must be fully recorded");
  if (forcing_n.size() != n_modes || f_of_prev.size() != n_modes)
    throw std::invalid_argument("step: forcing length mismatch");
  if (denominators.values.size() != n_modes)
    throw std::invalid_argument("step: denominator length mismatch");
  if (weights_beta.d.size() < n || weights_alpha.d.size() < n)
    throw std::invalid_argument("step: weight sequences too short");

  std::vector<double> sum_beta(n_modes, 0.0), sum_alpha(n_modes, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double db = weights_beta.d[i];
    const double da = weights_alpha.d[i];
    const double* row = traj.coeffs.row(n - i);
    for (std::size_t k = 0; k < n_modes; ++k) {
      sum_beta[k] += db * row[k];
      sum_alpha[k] += da * row[k];
    }
  }

  const double* prev = traj.coeffs.row(n - 1);
  double* out = traj.coeffs.row(n);
  for (std::size_t k = 0; k < n_modes; ++k) {
    const double numerator = prev[k] * denominators.inv_tau -
                             denominators.lambda * sum_beta[k] -
                             denominators.mu_rho_s[k] * sum_alpha[k] +
                             f_of_prev[k] + forcing_n[k];
    const double value = numerator / denominators.values[k];
    if (!std::isfinite(value))
      throw std::runtime_error("step: non-finite value at mode " +
                               std::to_string(k + 1) + ", step " + std::to_string(n));
    out[k] = value;
  }
  return std::vector<double>(out, out + n_modes);
}

namespace detail {

/// Thins a fully recorded trajectory to every record_every-th row, always
/// keeping rows 0 and n_steps.
inline SpectralTrajectory thin_trajectory(SpectralTrajectory full,
                                          std::size_t record_every) {
  if (record_every <= 1) return full;
  const std::size_t n_steps = full.coeffs.rows - 1;
  std::vector<std::size_t> keep;
  for (std::size_t n = 0; n <= n_steps; n += record_every) keep.push_back(n);
  if (keep.back() != n_steps) keep.push_back(n_steps);
  SpectralTrajectory out;
  out.basis = full.basis;
  out.tau = full.tau;
  out.recorded_steps = keep;
  out.coeffs = Matrix(keep.size(), full.coeffs.cols);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const double* src = full.coeffs.row(keep[r]);
    double* dst = out.coeffs.row(r);
    for (std::size_t k = 0; k < full.coeffs.cols; ++k) dst[k] = src[k];
  }
  return out;
}

struct ForcingPlan {
  bool active = false;
  Matrix rows;        // per time cell, unscaled projection rows
  double cell_measure = 0.0;
  std::size_t m = 0;
};

inline ForcingPlan plan_noise_forcing(const ModelParams& params, const Basis& basis,
                                      const SheetIncrements& noise,
                                      std::size_t n_steps) {
  if (noise.length_l != basis.length_l)
    throw std::invalid_argument("run: noise and basis domain lengths differ");
  if (std::abs(noise.horizon_t - params.horizon_t) >
      1e-12 * std::max(1.0, params.horizon_t))
    throw std::invalid_argument("run: noise horizon differs from the model horizon");
  if (noise.m == 0 || n_steps % noise.m != 0)
    throw std::invalid_argument("run: noise time cells must divide the step count");
  ForcingPlan plan;
  plan.active = true;
  plan.m = noise.m;
  plan.cell_measure = noise.tau_cell() * noise.h_cell();
  const Matrix table = cell_integral_table(basis, noise.mp);
  plan.rows = Matrix(noise.m, basis.n_modes);
  for (std::size_t i = 0; i < noise.m; ++i) {
    const std::vector<double> r = wz_projection_row(noise, table, i);
    double* dst = plan.rows.row(i);
    for (std::size_t k = 0; k < basis.n_modes; ++k) dst[k] = r[k];
  }
  return plan;
}

}  // namespace detail

/// Runs the fully discrete scheme with an optional driving sheet. The
/// forcing at step n projects the noise cell containing t_n and scales it
/// by gamma(t_n); absent noise the forcing is zero. record_every thins the
/// returned trajectory only; the march itself always keeps full history.
inline SpectralTrajectory run(const ModelParams& params, const Discretization& disc,
                              const SheetIncrements* noise,
                              std::size_t record_every = 1) {
  require_valid(params);
  if (disc.n_modes < 1 || disc.n_steps < 1)
    throw std::invalid_argument("run: discretization sizes must be positive");
  const Basis basis(params.length_l, disc.n_modes);
  const double tau = params.horizon_t / static_cast<double>(disc.n_steps);
  const CqWeights wb = cq_weights(1.0 - params.beta, tau, disc.n_steps);
  const CqWeights wa = cq_weights(1.0 - params.alpha, tau, disc.n_steps);
  const StepDenominators denoms = make_denominators(params, basis, tau, wb, wa);

  detail::ForcingPlan plan;
  if (noise != nullptr) plan = detail::plan_noise_forcing(params, basis, *noise, disc.n_steps);

  SpectralTrajectory traj;
  traj.basis = basis;
  traj.tau = tau;
  traj.recorded_steps.resize(disc.n_steps + 1);
  for (std::size_t n = 0; n <= disc.n_steps; ++n) traj.recorded_steps[n] = n;
  traj.coeffs = Matrix(disc.n_steps + 1, disc.n_modes);

  std::vector<double> forcing(disc.n_modes, 0.0);
  std::vector<double> prev(disc.n_modes, 0.0);
  for (std::size_t n = 1; n <= disc.n_steps; ++n) {
    if (plan.active) {
      const double t_n = tau * static_cast<double>(n);
      const std::size_t i_cell = detail::wz_time_cell(n, disc.n_steps, plan.m);
      const double scale =
          eval_gamma(params.gamma, t_n, params.horizon_t * (1.0 + 1e-12)) / plan.cell_measure;
      const double* src = plan.rows.row(i_cell);
      for (std::size_t k = 0; k < disc.n_modes; ++k) forcing[k] = src[k] * scale;
    }
    for (std::size_t k = 0; k < disc.n_modes; ++k) prev[k] = traj.coeffs(n - 1, k);
    const std::vector<double> f_prev = eval_f(params.nonlinearity, prev, params.length_l);
    step(traj, n, wb, wa, denoms, forcing, f_prev);
  }
  return detail::thin_trajectory(std::move(traj), record_every);
}

/// Runs the scheme with an explicit deterministic forcing table; ghat row n
/// is the forcing vector at step n (row 0 unused).
inline SpectralTrajectory run_with_forcing(const ModelParams& params,
                                           const Discretization& disc,
                                           const Matrix& ghat,
                                           std::size_t record_every = 1) {
  require_valid(params);
  if (disc.n_modes < 1 || disc.n_steps < 1)
    throw std::invalid_argument("run_with_forcing: discretization sizes must be positive");
  if (ghat.rows != disc.n_steps + 1 || ghat.cols != disc.n_modes)
    throw std::invalid_argument("run_with_forcing: forcing table shape mismatch");
  const Basis basis(params.length_l, disc.n_modes);
  const double tau = params.horizon_t / static_cast<double>(disc.n_steps);
  const CqWeights wb = cq_weights(1.0 - params.beta, tau, disc.n_steps);
  const CqWeights wa = cq_weights(1.0 - params.alpha, tau, disc.n_steps);
  const StepDenominators denoms = make_denominators(params, basis, tau, wb, wa);

  SpectralTrajectory traj;
  traj.basis = basis;
  traj.tau = tau;
  traj.recorded_steps.resize(disc.n_steps + 1);
  for (std::size_t n = 0; n <= disc.n_steps; ++n) traj.recorded_steps[n] = n;
  traj.coeffs = Matrix(disc.n_steps + 1, disc.n_modes);

  std::vector<double> forcing(disc.n_modes, 0.0);
  std::vector<double> prev(disc.n_modes, 0.0);
  for (std::size_t n = 1; n <= disc.n_steps; ++n) {
    const double* src = ghat.row(n);
    for (std::size_t k = 0; k < disc.n_modes; ++k) forcing[k] = src[k];
    for (std::size_t k = 0; k < disc.n_modes; ++k) prev[k] = traj.coeffs(n - 1, k);
    const std::vector<double> f_prev = eval_f(params.nonlinearity, prev, params.length_l);
    step(traj, n, wb, wa, denoms, forcing, f_prev);
  }
  return detail::thin_trajectory(std::move(traj), record_every);
}

/// Discrete impulse response of the linear scheme: coefficients of the
/// solution driven by unit forcing at step 1 and zero afterwards, with the
/// nonlinearity switched off. Because the recursion has constant
/// coefficients and zero initial data, the response to any forcing is the
/// lag convolution u_k^n = sum_{m=1}^{n} ghat_k^m G_k^{n-m+1}.
inline Matrix discrete_green(const ModelParams& params, const Discretization& disc) {
  ModelParams linear = params;
  linear.nonlinearity = NonlinearitySpec::zero();
  Matrix ghat(disc.n_steps + 1, disc.n_modes);
  for (std::size_t k = 0; k < disc.n_modes; ++k) ghat(1, k) = 1.0;
  return run_with_forcing(linear, disc, ghat).coeffs;
}

/// Semi-analytic solution of the deterministic linear problem with initial
/// data g: coefficient k at requested time t is u_k(t) g_k with u_k the
/// relaxation function. Requires the zero nonlinearity.
inline Matrix linear_reference(const ModelParams& params, const Basis& basis,
                               const std::vector<double>& g_coeffs,
                               const std::vector<double>& times,
                               unsigned n_threads = 1) {
  require_valid(params);
  if (params.nonlinearity.kind != NonlinearityKind::zero)
    throw std::invalid_argument("linear_reference: nonlinearity must be zero");
  if (g_coeffs.size() != basis.n_modes)
    throw std::invalid_argument("linear_reference: initial data length mismatch");
  for (double t : times)
    if (!(t >= 0.0))
      throw std::invalid_argument("linear_reference: times must be nonnegative");
  Matrix out(times.size(), basis.n_modes);
  parallel_for(basis.n_modes, n_threads, [&](std::size_t k) {
    const KernelEvaluator ev =
        make_kernel_evaluator(params.alpha, params.beta, params.lambda, params.mu,
                              std::pow(basis.eigenvalues[k], params.s));
    for (std::size_t i = 0; i < times.size(); ++i)
      out(i, k) = eval_u(times[i], ev) * g_coeffs[k];
  });
  return out;
}

/// Physical-space field values sum_k u_k e_k(x) for recorded row n.
inline std::vector<double> evaluate_field(const SpectralTrajectory& traj,
                                          std::size_t n,
                                          const std::vector<double>& xs) {
  if (n >= traj.coeffs.rows)
    throw std::invalid_argument("evaluate_field: row outside trajectory");
  std::vector<double> out(xs.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    if (!(x >= 0.0 && x <= traj.basis.length_l))
      throw std::invalid_argument("evaluate_field: x outside [0, l]");
    double acc = 0.0;
    for (std::size_t k = 1; k <= traj.basis.n_modes; ++k)
      acc += traj.coeffs(n, k - 1) * eigenfunction(k, traj.basis.length_l, x);
    out[i] = acc;
  }
  return out;
}

}  // namespace fcable
