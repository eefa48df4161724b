#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcable/basis.hpp"
#include "fcable/kernel.hpp"
#include "fcable/model.hpp"
#include "fcable/noise.hpp"
#include "fcable/parallel.hpp"
#include "fcable/rng.hpp"
#include "fcable/solver.hpp"

namespace fcable {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares on (log mesh, log error). Needs at least three
/// strictly positive entries and at least two distinct meshes.
inline FitResult fit_rate(const std::vector<double>& errors,
                          const std::vector<double>& meshes) {
  if (errors.size() != meshes.size())
    throw std::invalid_argument("fit_rate: errors and meshes must have equal length");
  if (errors.size() < 3)
    throw std::invalid_argument("fit_rate: need at least three levels");
  const std::size_t n = errors.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i]) || !(meshes[i] > 0.0))
      throw std::invalid_argument("fit_rate: entries must be positive and finite");
    xs[i] = std::log(meshes[i]);
    ys[i] = std::log(errors[i]);
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("fit_rate: meshes must not all coincide");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += r * r;
  }
  f.slope_stderr = std::sqrt(ss_res / (static_cast<double>(n) - 2.0) / sxx);
  return f;
}

enum class StudyKind { temporal, spatial_modes, wz_mesh, deterministic };

/// A convergence study: the reference (finest) discretization, a ladder of
/// coarser ones, and the Monte-Carlo configuration. error_time = 0 selects
/// the final time.
struct StudySpec {
  ModelParams params;
  Discretization reference;
  std::vector<Discretization> ladder;
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;
  double error_time = 0.0;
  StudyKind kind = StudyKind::temporal;
  double sigma = 0.5;
  double theta_margin = 0.01;
};

struct RateReport {
  StudyKind kind = StudyKind::temporal;
  std::vector<double> meshes;
  std::vector<double> rms_errors;
  std::vector<double> level_stderr;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double theoretical_exponent = 0.0;
  bool degenerate = false;
  Matrix sample_sq_errors;
};

namespace detail {

inline std::size_t study_error_step(double error_time, double horizon_t,
                                    std::size_t n_steps) {
  const double t = (error_time == 0.0) ? horizon_t : error_time;
  if (!(t > 0.0 && t <= horizon_t))
    throw std::invalid_argument("study: error_time outside (0, T]");
  const double pos = t / horizon_t * static_cast<double>(n_steps);
  const auto n = static_cast<std::size_t>(std::llround(pos));
  if (n < 1 || std::abs(pos - static_cast<double>(n)) > 1e-9 * std::max(1.0, pos))
    throw std::invalid_argument("study: error_time must land on a step of every level");
  return n;
}

/// Modulation scale per solver step: gamma(t_n) divided by the cell measure
/// of the regularization grid the forcing is assembled from.
inline std::vector<double> forcing_scales(const GammaSpec& gamma, double horizon_t,
                                          std::size_t n_steps, double cell_measure) {
  std::vector<double> s(n_steps + 1, 0.0);
  const double tau = horizon_t / static_cast<double>(n_steps);
  for (std::size_t n = 1; n <= n_steps; ++n)
    s[n] = eval_gamma(gamma, tau * static_cast<double>(n)) / cell_measure;
  return s;
}

/// Lag-convolution of per-step forcing rows with the impulse response,
/// evaluated at one step: u_k = sum_{n=1}^{n_err} ghat_k^n G_k^{n_err-n+1}.
/// The forcing row for step n is cell_rows.row(cell of t_n) times scales[n].
inline std::vector<double> green_solution_at(const Matrix& cell_rows,
                                             const std::vector<double>& scales,
                                             std::size_t m_cells, std::size_t n_steps,
                                             std::size_t n_err, const Matrix& green) {
  const std::size_t n_modes = green.cols;
  std::vector<double> acc(n_modes, 0.0);
  for (std::size_t n = 1; n <= n_err; ++n) {
    const double s = scales[n];
    const double* row = cell_rows.row(wz_time_cell(n, n_steps, m_cells));
    const double* g = green.row(n_err - n + 1);
    for (std::size_t k = 0; k < n_modes; ++k) acc[k] += s * row[k] * g[k];
  }
  return acc;
}

/// Projection rows of every time cell of a sheet against a mode table,
/// assembled with the same per-cell summation as the solver's noise path.
inline Matrix sheet_cell_rows(const SheetIncrements& inc, const Matrix& table) {
  Matrix rows(inc.m, table.cols);
  for (std::size_t i = 0; i < inc.m; ++i) {
    const std::vector<double> r = wz_projection_row(inc, table, i);
    double* dst = rows.row(i);
    for (std::size_t k = 0; k < table.cols; ++k) dst[k] = r[k];
  }
  return rows;
}

inline RateReport finish_report(StudyKind kind, std::vector<double> meshes,
                                double theoretical, Matrix sample_sq_errors) {
  RateReport rep;
  rep.kind = kind;
  rep.meshes = std::move(meshes);
  rep.theoretical_exponent = theoretical;
  rep.sample_sq_errors = std::move(sample_sq_errors);
  const std::size_t n_samples = rep.sample_sq_errors.rows;
  const std::size_t n_levels = rep.sample_sq_errors.cols;
  rep.rms_errors.resize(n_levels);
  rep.level_stderr.resize(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) mean += rep.sample_sq_errors(i, l);
    mean /= static_cast<double>(n_samples);
    rep.rms_errors[l] = std::sqrt(mean);
    double var = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double d = rep.sample_sq_errors(i, l) - mean;
      var += d * d;
    }
    if (n_samples > 1 && mean > 0.0) {
      var /= static_cast<double>(n_samples - 1);
      const double se_mean = std::sqrt(var / static_cast<double>(n_samples));
      rep.level_stderr[l] = se_mean / (2.0 * rep.rms_errors[l]);
    } else {
      rep.level_stderr[l] = 0.0;
    }
  }
  bool fittable = n_levels >= 3;
  for (double e : rep.rms_errors)
    if (!(e > 0.0) || !std::isfinite(e)) fittable = false;
  if (fittable) {
    const FitResult f = fit_rate(rep.rms_errors, rep.meshes);
    rep.slope = f.slope;
    rep.slope_stderr = f.slope_stderr;
  } else {
    rep.degenerate = true;
  }
  return rep;
}

}  // namespace detail

/// Strong temporal order: reference scheme on the finest time grid versus
/// the same scheme on each coarser grid, driven by time-coarsenings of one
/// common sheet per sample. Errors are discrete L2 coefficient norms at
/// error_time. The linear case runs through the impulse-response
/// superposition, which agrees with the time-stepped march to rounding.
inline RateReport strong_error_temporal(const StudySpec& spec, unsigned n_threads = 1) {
  if (spec.kind != StudyKind::temporal)
    throw std::invalid_argument("strong_error_temporal: study kind mismatch");
  require_valid(spec.params);
  if (spec.n_samples < 1)
    throw std::invalid_argument("strong_error_temporal: need at least one sample");
  const Discretization& ref = spec.reference;
  if (ref.wz_time != ref.n_steps)
    throw std::invalid_argument("strong_error_temporal: reference cells must match its steps");
  for (const Discretization& lv : spec.ladder) {
    if (lv.n_modes != ref.n_modes || lv.wz_space != ref.wz_space)
      throw std::invalid_argument("strong_error_temporal: ladder varies a fixed grid");
    if (lv.wz_time != lv.n_steps)
      throw std::invalid_argument("strong_error_temporal: ladder cells must match its steps");
    if (lv.n_steps < 1 || ref.n_steps % lv.n_steps != 0)
      throw std::invalid_argument("strong_error_temporal: ladder steps must divide the reference");
  }
  const ModelParams& p = spec.params;
  const std::size_t n_levels = spec.ladder.size();
  const Basis basis(p.length_l, ref.n_modes);
  const std::size_t n_err_ref =
      detail::study_error_step(spec.error_time, p.horizon_t, ref.n_steps);
  std::vector<std::size_t> n_err_level(n_levels);
  std::vector<double> meshes(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) {
    n_err_level[l] =
        detail::study_error_step(spec.error_time, p.horizon_t, spec.ladder[l].n_steps);
    meshes[l] = p.horizon_t / static_cast<double>(spec.ladder[l].n_steps);
  }

  const CovFactor time_factor =
      build_factor(p.hurst.h2, uniform_edges(p.horizon_t, ref.wz_time));
  const CovFactor space_factor =
      build_factor(p.hurst.h1, uniform_edges(p.length_l, ref.wz_space));
  const bool linear_path = p.nonlinearity.kind == NonlinearityKind::zero;

  Matrix table;
  Matrix green_ref;
  std::vector<Matrix> green_level(n_levels);
  std::vector<double> scales_ref;
  std::vector<std::vector<double>> scales_level(n_levels);
  if (linear_path) {
    table = cell_integral_table(basis, ref.wz_space);
    green_ref = discrete_green(p, ref);
    const double h_cell = p.length_l / static_cast<double>(ref.wz_space);
    scales_ref = detail::forcing_scales(
        p.gamma, p.horizon_t, ref.n_steps,
        p.horizon_t / static_cast<double>(ref.wz_time) * h_cell);
    for (std::size_t l = 0; l < n_levels; ++l) {
      green_level[l] = discrete_green(p, spec.ladder[l]);
      scales_level[l] = detail::forcing_scales(
          p.gamma, p.horizon_t, spec.ladder[l].n_steps,
          p.horizon_t / static_cast<double>(spec.ladder[l].wz_time) * h_cell);
    }
  }

  Matrix sample_sq(spec.n_samples, n_levels);
  parallel_for(spec.n_samples, n_threads, [&](std::size_t i) {
    const SheetIncrements sheet =
        sample_sheet(time_factor, space_factor, p.hurst, p.horizon_t, p.length_l,
                     derive_stream(spec.seed, i));
    std::vector<double> u_ref;
    if (linear_path) {
      const Matrix rows = detail::sheet_cell_rows(sheet, table);
      u_ref = detail::green_solution_at(rows, scales_ref, sheet.m, ref.n_steps,
                                        n_err_ref, green_ref);
    } else {
      const SpectralTrajectory traj = run(p, ref, &sheet);
      u_ref.assign(traj.coeffs.row(n_err_ref), traj.coeffs.row(n_err_ref) + ref.n_modes);
    }
    for (std::size_t l = 0; l < n_levels; ++l) {
      const SheetIncrements coarse =
          coarsen(sheet, ref.wz_time / spec.ladder[l].wz_time, 1);
      std::vector<double> u_level;
      if (linear_path) {
        const Matrix rows = detail::sheet_cell_rows(coarse, table);
        u_level = detail::green_solution_at(rows, scales_level[l], coarse.m,
                                            spec.ladder[l].n_steps, n_err_level[l],
                                            green_level[l]);
      } else {
        const SpectralTrajectory traj = run(p, spec.ladder[l], &coarse);
        u_level.assign(traj.coeffs.row(n_err_level[l]),
                       traj.coeffs.row(n_err_level[l]) + ref.n_modes);
      }
      double sq = 0.0;
      for (std::size_t k = 0; k < ref.n_modes; ++k) {
        const double d = u_level[k] - u_ref[k];
        sq += d * d;
      }
      sample_sq(i, l) = sq;
    }
  });

  const double theoretical =
      p.hurst.h2 + p.alpha * (p.hurst.h1 - 1.0) / (2.0 * p.s);
  return detail::finish_report(StudyKind::temporal, std::move(meshes), theoretical,
                               std::move(sample_sq));
}

/// Regularization-grid refinement: the solver grid stays at the reference
/// while the piecewise-constant noise cells coarsen, so the error isolates
/// the cell-averaging of the sheet. Reported meshes are the coarsened cell
/// widths (time width if time cells vary, else space width, else their max).
inline RateReport strong_error_wz(const StudySpec& spec, unsigned n_threads = 1) {
  if (spec.kind != StudyKind::wz_mesh)
    throw std::invalid_argument("strong_error_wz: study kind mismatch");
  require_valid(spec.params);
  if (spec.n_samples < 1)
    throw std::invalid_argument("strong_error_wz: need at least one sample");
  const Discretization& ref = spec.reference;
  bool vary_t = false, vary_x = false;
  for (const Discretization& lv : spec.ladder) {
    if (lv.n_modes != ref.n_modes || lv.n_steps != ref.n_steps)
      throw std::invalid_argument("strong_error_wz: solver grid must stay at the reference");
    if (lv.wz_time < 1 || ref.wz_time % lv.wz_time != 0 || lv.wz_space < 1 ||
        ref.wz_space % lv.wz_space != 0)
      throw std::invalid_argument("strong_error_wz: ladder cells must divide the reference");
    if (ref.n_steps % lv.wz_time != 0)
      throw std::invalid_argument("strong_error_wz: ladder cells must divide the step count");
    vary_t = vary_t || lv.wz_time != ref.wz_time;
    vary_x = vary_x || lv.wz_space != ref.wz_space;
  }
  if (ref.n_steps % ref.wz_time != 0)
    throw std::invalid_argument("strong_error_wz: reference cells must divide the step count");
  const ModelParams& p = spec.params;
  const std::size_t n_levels = spec.ladder.size();
  const Basis basis(p.length_l, ref.n_modes);
  const std::size_t n_err =
      detail::study_error_step(spec.error_time, p.horizon_t, ref.n_steps);
  std::vector<double> meshes(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) {
    const double mesh_t = p.horizon_t / static_cast<double>(spec.ladder[l].wz_time);
    const double mesh_x = p.length_l / static_cast<double>(spec.ladder[l].wz_space);
    meshes[l] = (vary_t && vary_x) ? std::max(mesh_t, mesh_x) : (vary_t ? mesh_t : mesh_x);
  }

  const CovFactor time_factor =
      build_factor(p.hurst.h2, uniform_edges(p.horizon_t, ref.wz_time));
  const CovFactor space_factor =
      build_factor(p.hurst.h1, uniform_edges(p.length_l, ref.wz_space));
  const bool linear_path = p.nonlinearity.kind == NonlinearityKind::zero;

  Matrix green;
  Matrix table_ref;
  std::vector<Matrix> table_level(n_levels);
  std::vector<double> scales_ref;
  std::vector<std::vector<double>> scales_level(n_levels);
  if (linear_path) {
    green = discrete_green(p, ref);
    table_ref = cell_integral_table(basis, ref.wz_space);
    scales_ref = detail::forcing_scales(
        p.gamma, p.horizon_t, ref.n_steps,
        p.horizon_t / static_cast<double>(ref.wz_time) * p.length_l /
            static_cast<double>(ref.wz_space));
    for (std::size_t l = 0; l < n_levels; ++l) {
      table_level[l] = cell_integral_table(basis, spec.ladder[l].wz_space);
      scales_level[l] = detail::forcing_scales(
          p.gamma, p.horizon_t, ref.n_steps,
          p.horizon_t / static_cast<double>(spec.ladder[l].wz_time) * p.length_l /
              static_cast<double>(spec.ladder[l].wz_space));
    }
  }

  Matrix sample_sq(spec.n_samples, n_levels);
  parallel_for(spec.n_samples, n_threads, [&](std::size_t i) {
    const SheetIncrements sheet =
        sample_sheet(time_factor, space_factor, p.hurst, p.horizon_t, p.length_l,
                     derive_stream(spec.seed, i));
    if (linear_path) {
      const Matrix rows_ref = detail::sheet_cell_rows(sheet, table_ref);
      for (std::size_t l = 0; l < n_levels; ++l) {
        const SheetIncrements coarse =
            coarsen(sheet, ref.wz_time / spec.ladder[l].wz_time,
                    ref.wz_space / spec.ladder[l].wz_space);
        const Matrix rows_level = detail::sheet_cell_rows(coarse, table_level[l]);
        // Level and reference solutions are accumulated separately with the
        // same operation order, so a ladder entry equal to the reference grid
        // cancels exactly regardless of floating point contraction.
        std::vector<double> acc_lvl(ref.n_modes, 0.0);
        std::vector<double> acc_ref(ref.n_modes, 0.0);
        for (std::size_t n = 1; n <= n_err; ++n) {
          const double s_ref = scales_ref[n];
          const double s_lvl = scales_level[l][n];
          const double* a =
              rows_level.row(detail::wz_time_cell(n, ref.n_steps, coarse.m));
          const double* b = rows_ref.row(detail::wz_time_cell(n, ref.n_steps, sheet.m));
          const double* g = green.row(n_err - n + 1);
          for (std::size_t k = 0; k < ref.n_modes; ++k) {
            acc_lvl[k] += s_lvl * a[k] * g[k];
            acc_ref[k] += s_ref * b[k] * g[k];
          }
        }
        double sq = 0.0;
        for (std::size_t k = 0; k < ref.n_modes; ++k) {
          const double v = acc_lvl[k] - acc_ref[k];
          sq += v * v;
        }
        sample_sq(i, l) = sq;
      }
    } else {
      const SpectralTrajectory traj_ref = run(p, ref, &sheet);
      for (std::size_t l = 0; l < n_levels; ++l) {
        const SheetIncrements coarse =
            coarsen(sheet, ref.wz_time / spec.ladder[l].wz_time,
                    ref.wz_space / spec.ladder[l].wz_space);
        const SpectralTrajectory traj = run(p, spec.ladder[l], &coarse);
        double sq = 0.0;
        for (std::size_t k = 0; k < ref.n_modes; ++k) {
          const double d = traj.coeffs(n_err, k) - traj_ref.coeffs(n_err, k);
          sq += d * d;
        }
        sample_sq(i, l) = sq;
      }
    }
  });

  const double th_t = p.hurst.h2 - p.alpha / (4.0 * p.s);
  const double th_x = spec.sigma + p.hurst.h1 - 0.5;
  const double theoretical =
      (vary_t && vary_x) ? std::min(th_t, th_x) : (vary_t ? th_t : th_x);
  return detail::finish_report(StudyKind::wz_mesh, std::move(meshes), theoretical,
                               std::move(sample_sq));
}

/// Mode-truncation refinement: the ladder varies the spectral cutoff while
/// time grid and noise stay at the reference. Because modes decouple in the
/// linear case, the truncation error is the coefficient tail of the
/// reference solution. The reported slope is against the mode count, so it
/// is negative; the theoretical exponent is the predicted slope.
inline RateReport spectral_error_study(const StudySpec& spec, unsigned n_threads = 1) {
  if (spec.kind != StudyKind::spatial_modes)
    throw std::invalid_argument("spectral_error_study: study kind mismatch");
  require_valid(spec.params);
  if (spec.n_samples < 1)
    throw std::invalid_argument("spectral_error_study: need at least one sample");
  const Discretization& ref = spec.reference;
  for (const Discretization& lv : spec.ladder) {
    if (lv.n_steps != ref.n_steps || lv.wz_time != ref.wz_time ||
        lv.wz_space != ref.wz_space)
      throw std::invalid_argument("spectral_error_study: only the mode count may vary");
    if (lv.n_modes < 1 || lv.n_modes > ref.n_modes)
      throw std::invalid_argument("spectral_error_study: ladder modes must not exceed the reference");
  }
  if (ref.n_steps % ref.wz_time != 0)
    throw std::invalid_argument("spectral_error_study: reference cells must divide the step count");
  const ModelParams& p = spec.params;
  const std::size_t n_levels = spec.ladder.size();
  const Basis basis(p.length_l, ref.n_modes);
  const std::size_t n_err =
      detail::study_error_step(spec.error_time, p.horizon_t, ref.n_steps);
  std::vector<double> meshes(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l)
    meshes[l] = static_cast<double>(spec.ladder[l].n_modes);

  const CovFactor time_factor =
      build_factor(p.hurst.h2, uniform_edges(p.horizon_t, ref.wz_time));
  const CovFactor space_factor =
      build_factor(p.hurst.h1, uniform_edges(p.length_l, ref.wz_space));
  const bool linear_path = p.nonlinearity.kind == NonlinearityKind::zero;

  Matrix green;
  Matrix table;
  std::vector<double> scales;
  if (linear_path) {
    green = discrete_green(p, ref);
    table = cell_integral_table(basis, ref.wz_space);
    scales = detail::forcing_scales(
        p.gamma, p.horizon_t, ref.n_steps,
        p.horizon_t / static_cast<double>(ref.wz_time) * p.length_l /
            static_cast<double>(ref.wz_space));
  }

  Matrix sample_sq(spec.n_samples, n_levels);
  parallel_for(spec.n_samples, n_threads, [&](std::size_t i) {
    const SheetIncrements sheet =
        sample_sheet(time_factor, space_factor, p.hurst, p.horizon_t, p.length_l,
                     derive_stream(spec.seed, i));
    if (linear_path) {
      const Matrix rows = detail::sheet_cell_rows(sheet, table);
      const std::vector<double> u_ref =
          detail::green_solution_at(rows, scales, sheet.m, ref.n_steps, n_err, green);
      for (std::size_t l = 0; l < n_levels; ++l) {
        double sq = 0.0;
        for (std::size_t k = spec.ladder[l].n_modes; k < ref.n_modes; ++k)
          sq += u_ref[k] * u_ref[k];
        sample_sq(i, l) = sq;
      }
    } else {
      const SpectralTrajectory traj_ref = run(p, ref, &sheet);
      for (std::size_t l = 0; l < n_levels; ++l) {
        const SpectralTrajectory traj = run(p, spec.ladder[l], &sheet);
        double sq = 0.0;
        for (std::size_t k = 0; k < ref.n_modes; ++k) {
          const double coarse_k =
              (k < spec.ladder[l].n_modes) ? traj.coeffs(n_err, k) : 0.0;
          const double d = coarse_k - traj_ref.coeffs(n_err, k);
          sq += d * d;
        }
        sample_sq(i, l) = sq;
      }
    }
  });

  const double theta = std::min(p.hurst.h2 / p.alpha, 1.0) - spec.theta_margin;
  const double theoretical = -2.0 * p.s * theta;
  return detail::finish_report(StudyKind::spatial_modes, std::move(meshes), theoretical,
                               std::move(sample_sq));
}

/// First-order time-stepping check on a noise-free problem with smooth
/// forcing e^{-t} in the first few modes. Self-convergence against the
/// reference grid; the expected slope is 1 (backward Euler).
inline RateReport deterministic_rate_study(const StudySpec& spec) {
  if (spec.kind != StudyKind::deterministic)
    throw std::invalid_argument("deterministic_rate_study: study kind mismatch");
  require_valid(spec.params);
  const Discretization& ref = spec.reference;
  for (const Discretization& lv : spec.ladder) {
    if (lv.n_modes != ref.n_modes)
      throw std::invalid_argument("deterministic_rate_study: mode count must stay fixed");
    if (lv.n_steps < 1 || ref.n_steps % lv.n_steps != 0)
      throw std::invalid_argument("deterministic_rate_study: ladder steps must divide the reference");
  }
  const ModelParams& p = spec.params;
  const std::size_t n_levels = spec.ladder.size();
  const std::size_t forced_modes = std::min<std::size_t>(8, ref.n_modes);

  auto forcing_table = [&](std::size_t n_steps) {
    Matrix ghat(n_steps + 1, ref.n_modes);
    const double tau = p.horizon_t / static_cast<double>(n_steps);
    for (std::size_t n = 1; n <= n_steps; ++n) {
      const double v = std::exp(-tau * static_cast<double>(n));
      for (std::size_t k = 0; k < forced_modes; ++k) ghat(n, k) = v;
    }
    return ghat;
  };

  const std::size_t n_err_ref =
      detail::study_error_step(spec.error_time, p.horizon_t, ref.n_steps);
  const SpectralTrajectory traj_ref =
      run_with_forcing(p, ref, forcing_table(ref.n_steps));

  std::vector<double> meshes(n_levels);
  Matrix sample_sq(1, n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) {
    const std::size_t n_steps = spec.ladder[l].n_steps;
    meshes[l] = p.horizon_t / static_cast<double>(n_steps);
    const std::size_t n_err =
        detail::study_error_step(spec.error_time, p.horizon_t, n_steps);
    const SpectralTrajectory traj =
        run_with_forcing(p, spec.ladder[l], forcing_table(n_steps));
    double sq = 0.0;
    for (std::size_t k = 0; k < ref.n_modes; ++k) {
      const double d = traj.coeffs(n_err, k) - traj_ref.coeffs(n_err_ref, k);
      sq += d * d;
    }
    sample_sq(0, l) = sq;
  }
  return detail::finish_report(StudyKind::deterministic, std::move(meshes), 1.0,
                               std::move(sample_sq));
}

/// Truncation-tail decay of the deterministic solution map: for coefficient
/// data g, error(N) = sqrt(sum_{k>N} (u_k(t) g_k)^2) against the full tail
/// kept in g. The theoretical exponent follows from the kernel's large-mode
/// decay u_k ~ rho_k^{-s} and the data tail.
inline RateReport operator_tail_study(const ModelParams& params,
                                      const std::vector<double>& g_coeffs, double t,
                                      const std::vector<std::size_t>& n_ladder,
                                      double data_exponent, unsigned n_threads = 1) {
  require_valid(params);
  if (!(t > 0.0))
    throw std::invalid_argument("operator_tail_study: t must be positive");
  if (n_ladder.size() < 1)
    throw std::invalid_argument("operator_tail_study: empty ladder");
  const std::size_t n_ref = g_coeffs.size();
  for (std::size_t n : n_ladder)
    if (n < 1 || n >= n_ref)
      throw std::invalid_argument("operator_tail_study: ladder must stay below the reference modes");
  const Basis basis(params.length_l, n_ref);
  std::vector<double> terms(n_ref, 0.0);
  parallel_for(n_ref, n_threads, [&](std::size_t k) {
    const KernelEvaluator ev =
        make_kernel_evaluator(params.alpha, params.beta, params.lambda, params.mu,
                              std::pow(basis.eigenvalues[k], params.s));
    const double v = eval_u(t, ev) * g_coeffs[k];
    terms[k] = v * v;
  });
  std::vector<double> meshes(n_ladder.size());
  Matrix sample_sq(1, n_ladder.size());
  for (std::size_t l = 0; l < n_ladder.size(); ++l) {
    meshes[l] = static_cast<double>(n_ladder[l]);
    double sq = 0.0;
    for (std::size_t k = n_ladder[l]; k < n_ref; ++k) sq += terms[k];
    sample_sq(0, l) = sq;
  }
  const double theoretical = -(2.0 * params.s + data_exponent - 0.5);
  return detail::finish_report(StudyKind::spatial_modes, std::move(meshes), theoretical,
                               std::move(sample_sq));
}

struct CovarianceEntry {
  std::size_t a_time = 0, a_space = 0, b_time = 0, b_space = 0;
  double observed = 0.0;
  double expected = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct CovarianceReport {
  std::size_t m = 0, mp = 0;
  double horizon_t = 0.0, length_l = 0.0;
  HurstPair hurst;
  std::size_t n_samples = 0;
  std::vector<CovarianceEntry> entries;
  double max_abs_z = 0.0;
  bool pass = false;
};

/// Empirical second moments of the sheet increments against the separable
/// analytic covariance, in analytic standard-error units (Gaussian fourth
/// moments). Pass means every entry is within five standard errors.
inline CovarianceReport covariance_study(const HurstPair& hurst, std::size_t m,
                                         std::size_t mp, double horizon_t,
                                         double length_l, std::size_t n_samples,
                                         std::uint64_t seed) {
  if (m < 1 || m > 8 || mp < 1 || mp > 8)
    throw std::invalid_argument("covariance_study: grid must be between 1x1 and 8x8");
  if (n_samples < 2)
    throw std::invalid_argument("covariance_study: need at least two samples");
  const std::vector<double> edges_t = uniform_edges(horizon_t, m);
  const std::vector<double> edges_x = uniform_edges(length_l, mp);
  const CovFactor time_factor = build_factor(hurst.h2, edges_t);
  const CovFactor space_factor = build_factor(hurst.h1, edges_x);
  auto cov_t = [&](std::size_t i, std::size_t j) {
    return increment_covariance_1d(hurst.h2, edges_t[i], edges_t[i + 1], edges_t[j],
                                   edges_t[j + 1]);
  };
  auto cov_x = [&](std::size_t i, std::size_t j) {
    return increment_covariance_1d(hurst.h1, edges_x[i], edges_x[i + 1], edges_x[j],
                                   edges_x[j + 1]);
  };

  const std::size_t dim = m * mp;
  Matrix second(dim, dim);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const SheetIncrements s = sample_sheet(time_factor, space_factor, hurst, horizon_t,
                                           length_l, derive_stream(seed, i));
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = a; b < dim; ++b)
        second(a, b) += s.data.a[a] * s.data.a[b];
  }

  CovarianceReport rep;
  rep.m = m;
  rep.mp = mp;
  rep.horizon_t = horizon_t;
  rep.length_l = length_l;
  rep.hurst = hurst;
  rep.n_samples = n_samples;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      CovarianceEntry e;
      e.a_time = a / mp;
      e.a_space = a % mp;
      e.b_time = b / mp;
      e.b_space = b % mp;
      e.observed = second(a, b) / static_cast<double>(n_samples);
      e.expected = cov_t(e.a_time, e.b_time) * cov_x(e.a_space, e.b_space);
      const double var_a = cov_t(e.a_time, e.a_time) * cov_x(e.a_space, e.a_space);
      const double var_b = cov_t(e.b_time, e.b_time) * cov_x(e.b_space, e.b_space);
      e.se = std::sqrt((var_a * var_b + e.expected * e.expected) /
                       static_cast<double>(n_samples));
      e.z = (e.observed - e.expected) / e.se;
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(e.z));
      rep.entries.push_back(e);
    }
  }
  rep.pass = rep.max_abs_z <= 5.0;
  return rep;
}

/// Executes the relaxation-kernel property battery for modes 1..k_max on
/// the supplied time grid, plus internal grids for the shape properties.
/// Checks: pointwise bounds, monotone decrease and convexity proxies,
/// k-uniform weighted upper and lower bound ratios, and the Lipschitz-type
/// difference bound with a constant calibrated at the first mode.
inline ValidationReport kernel_property_suite(const ModelParams& params,
                                              std::size_t k_max,
                                              const std::vector<double>& t_grid) {
  require_valid(params);
  if (k_max < 1)
    throw std::invalid_argument("kernel_property_suite: need at least one mode");
  for (double t : t_grid)
    if (!(t >= 0.0))
      throw std::invalid_argument("kernel_property_suite: grid times must be nonnegative");
  const Basis basis(params.length_l, k_max);
  std::vector<KernelEvaluator> evs;
  evs.reserve(k_max);
  std::vector<double> rho_s(k_max);
  for (std::size_t k = 0; k < k_max; ++k) {
    rho_s[k] = std::pow(basis.eigenvalues[k], params.s);
    evs.push_back(make_kernel_evaluator(params.alpha, params.beta, params.lambda,
                                        params.mu, rho_s[k]));
  }
  const std::size_t n_shape = 65;
  std::vector<double> shape_grid(n_shape);
  for (std::size_t i = 0; i < n_shape; ++i)
    shape_grid[i] = 0.05 + (2.0 - 0.05) * static_cast<double>(i) /
                               static_cast<double>(n_shape - 1);

  ValidationReport rep;
  auto add = [&rep](const std::string& name, bool pass, const std::string& detail) {
    rep.checks.push_back({name, pass, detail});
  };

  bool bounds_ok = true;
  double worst_hi = 0.0, worst_lo = 1.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    for (double t : t_grid) {
      const double u = eval_u(t, evs[k]);
      worst_hi = std::max(worst_hi, u);
      worst_lo = std::min(worst_lo, u);
      if (!(u > 0.0 && u <= 1.0)) bounds_ok = false;
      if (t == 0.0 && u != 1.0) bounds_ok = false;
    }
  }
  add("pointwise_bounds", bounds_ok,
      "max " + std::to_string(worst_hi) + ", min " + std::to_string(worst_lo));

  Matrix shape(k_max, n_shape);
  for (std::size_t k = 0; k < k_max; ++k)
    for (std::size_t i = 0; i < n_shape; ++i) shape(k, i) = eval_u(shape_grid[i], evs[k]);

  bool mono_ok = true;
  double worst_rise = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    for (std::size_t i = 1; i < n_shape; ++i) {
      const double rise = shape(k, i) - shape(k, i - 1);
      worst_rise = std::max(worst_rise, rise);
      if (rise > 1e-10) mono_ok = false;
    }
  }
  add("monotone_decrease", mono_ok, "largest first difference " + std::to_string(worst_rise));

  bool convex_ok = true;
  double worst_dip = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    for (std::size_t i = 2; i < n_shape; ++i) {
      const double dd = shape(k, i) - 2.0 * shape(k, i - 1) + shape(k, i - 2);
      worst_dip = std::min(worst_dip, dd);
      if (dd < -1e-10) convex_ok = false;
    }
  }
  add("convexity", convex_ok, "smallest second difference " + std::to_string(worst_dip));

  auto weighted_max = [&](std::size_t k_lo, std::size_t k_hi) {
    double peak = 0.0;
    for (std::size_t k = k_lo; k < k_hi; ++k) {
      for (std::size_t i = 0; i < n_shape; ++i) {
        const double t = shape_grid[i];
        const double w = 1.0 + params.lambda * std::pow(t, params.beta) +
                         rho_s[k] * std::pow(t, params.alpha);
        peak = std::max(peak, shape(k, i) * w);
      }
    }
    return peak;
  };
  const std::size_t head = std::min<std::size_t>(8, k_max);
  const double peak_head = weighted_max(0, head);
  const double peak_all = weighted_max(0, k_max);
  const bool upper_ok = peak_all <= 1.5 * peak_head;
  add("uniform_upper_ratio", upper_ok,
      "all-mode peak " + std::to_string(peak_all) + " vs leading-mode peak " +
          std::to_string(peak_head));

  double lower_first = std::numeric_limits<double>::infinity();
  double lower_all = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_max; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_shape; ++i)
      lo = std::min(lo, rho_s[k] * shape(k, i) * std::exp(shape_grid[i]));
    if (k == 0) lower_first = lo;
    lower_all = std::min(lower_all, lo);
  }
  const bool lower_ok = lower_all > 0.0 && lower_all >= 0.1 * lower_first;
  add("uniform_lower_ratio", lower_ok,
      "smallest weighted value " + std::to_string(lower_all) + " vs first mode " +
          std::to_string(lower_first));

  bool diff_ok = true;
  double c_first = 0.0;
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    double c_k = 0.0;
    for (std::size_t i = 0; i < n_shape; ++i) {
      const double t = shape_grid[i];
      if (t < 0.5) continue;
      const double h = t / 4.0;
      const double jump = std::abs(eval_u(t, evs[k]) - eval_u(t - h, evs[k]));
      c_k = std::max(c_k, jump * (t - h) / h);
    }
    if (k == 0) c_first = c_k;
    else if (c_first > 0.0) worst_ratio = std::max(worst_ratio, c_k / c_first);
  }
  if (k_max > 1 && worst_ratio > 2.0) diff_ok = false;
  add("difference_bound", diff_ok,
      "constant at first mode " + std::to_string(c_first) + ", worst ratio " +
          std::to_string(worst_ratio));

  return rep;
}

/// Fraction of bootstrap resamples of the per-sample squared errors whose
/// level means increase with the mesh. Levels are compared in mesh order;
/// a high fraction indicates the error ordering is not a sampling artifact.
inline double bootstrap_monotone_fraction(const Matrix& sample_sq_errors,
                                          const std::vector<double>& meshes,
                                          std::size_t n_resamples, std::uint64_t seed) {
  const std::size_t n_samples = sample_sq_errors.rows;
  const std::size_t n_levels = sample_sq_errors.cols;
  if (meshes.size() != n_levels)
    throw std::invalid_argument("bootstrap_monotone_fraction: mesh count mismatch");
  if (n_samples < 1 || n_levels < 2)
    throw std::invalid_argument("bootstrap_monotone_fraction: need samples and >= 2 levels");
  if (n_resamples < 1)
    throw std::invalid_argument("bootstrap_monotone_fraction: need at least one resample");
  std::vector<std::size_t> order(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) order[l] = l;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return meshes[a] < meshes[b]; });

  const CounterRng rng(seed);
  std::size_t monotone = 0;
  std::vector<double> mean(n_levels);
  for (std::size_t r = 0; r < n_resamples; ++r) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double u = rng.uniform(r * n_samples + i);
      auto pick = static_cast<std::size_t>(u * static_cast<double>(n_samples));
      if (pick >= n_samples) pick = n_samples - 1;
      for (std::size_t l = 0; l < n_levels; ++l) mean[l] += sample_sq_errors(pick, l);
    }
    bool ok = true;
    for (std::size_t l = 1; l < n_levels; ++l)
      if (mean[order[l]] < mean[order[l - 1]]) ok = false;
    if (ok) ++monotone;
  }
  return static_cast<double>(monotone) / static_cast<double>(n_resamples);
}

}  // namespace fcable
