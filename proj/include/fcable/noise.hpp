#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fcable/basis.hpp"
#include "fcable/linalg.hpp"
#include "fcable/model.hpp"
#include "fcable/rng.hpp"

namespace fcable {

/// Covariance of two increments of fractional Brownian motion over [a, b]
/// and [c, d]: 1/2 (|b-c|^2H + |a-d|^2H - |a-c|^2H - |b-d|^2H).
inline double increment_covariance_1d(double H, double a, double b, double c,
                                      double d) {
  if (!(H > 0.0 && H <= 0.5))
    throw std::invalid_argument("increment_covariance_1d: H must lie in (0, 1/2]");
  if (!(a >= 0.0 && a < b && c >= 0.0 && c < d))
    throw std::invalid_argument("increment_covariance_1d: intervals must satisfy 0 <= a < b, 0 <= c < d");
  const double e = 2.0 * H;
  return 0.5 * (std::pow(std::abs(b - c), e) + std::pow(std::abs(a - d), e) -
                std::pow(std::abs(a - c), e) - std::pow(std::abs(b - d), e));
}

/// Cholesky-type factor L of the cell-increment covariance of 1D fractional
/// Brownian motion on a cell partition, with L L^T = C. Stored banded; the
/// bandwidth is detected from exact zero entries, which collapses to a
/// diagonal factor at H = 1/2 on exact-width cells.
struct CovFactor {
  double hurst = 0.5;
  std::vector<double> edges;
  BandedLower factor;

  std::size_t dimension() const { return factor.n; }
};

inline CovFactor build_factor(double H, const std::vector<double>& edges) {
  if (edges.size() < 2)
    throw std::invalid_argument("build_factor: need at least one cell");
  if (!(edges.front() >= 0.0))
    throw std::invalid_argument("build_factor: edges must start at >= 0");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw std::invalid_argument("build_factor: edges must be strictly increasing");
  const std::size_t m = edges.size() - 1;
  auto cov = [&](std::size_t i, std::size_t j) {
    return increment_covariance_1d(H, edges[j], edges[j + 1], edges[i], edges[i + 1]);
  };

  std::size_t band = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (cov(i, j) != 0.0) {
        band = std::max(band, i - j);
        break;
      }
    }
  }

  BandedLower pristine(m, band);
  double trace = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j0 = (i > band) ? i - band : 0;
    for (std::size_t j = j0; j <= i; ++j) pristine.at(i, j) = cov(i, j);
    trace += pristine.at(i, i);
  }

  double jitter = 0.0;
  const double jitter_base = 1e-12 * trace / static_cast<double>(m);
  for (int attempt = 0; attempt < 4; ++attempt) {
    BandedLower work = pristine;
    if (jitter > 0.0)
      for (std::size_t i = 0; i < m; ++i) work.at(i, i) += jitter;
    if (cholesky_banded(work)) {
      CovFactor f;
      f.hurst = H;
      f.edges = edges;
      f.factor = std::move(work);
      return f;
    }
    jitter = (jitter == 0.0) ? jitter_base : 10.0 * jitter;
  }
  throw std::runtime_error("build_factor: covariance not factorizable after jitter escalation");
}

inline std::vector<double> uniform_edges(double upper, std::size_t cells) {
  if (cells < 1) throw std::invalid_argument("uniform_edges: need at least one cell");
  if (!(upper > 0.0)) throw std::invalid_argument("uniform_edges: upper bound must be positive");
  std::vector<double> e(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    e[i] = upper * static_cast<double>(i) / static_cast<double>(cells);
  return e;
}

/// Rectangle increments of the fractional Brownian sheet on an m x m' cell
/// grid over [0, T] x [0, l]; data(i, j) integrates the sheet over time cell
/// i and space cell j.
struct SheetIncrements {
  std::size_t m = 0;
  std::size_t mp = 0;
  double horizon_t = 0.0;
  double length_l = 0.0;
  HurstPair hurst;
  std::uint64_t seed = 0;
  Matrix data;

  double tau_cell() const { return horizon_t / static_cast<double>(m); }
  double h_cell() const { return length_l / static_cast<double>(mp); }
};

/// Draws one sheet from prebuilt 1D factors: data = L_t Z L_x^T with Z an
/// m x m' matrix of independent standard normals read row-major from the
/// counter stream of rng_seed. Bit-identical for identical seeds.
inline SheetIncrements sample_sheet(const CovFactor& time_factor,
                                    const CovFactor& space_factor,
                                    const HurstPair& hurst, double horizon_t,
                                    double length_l, std::uint64_t rng_seed) {
  if (time_factor.hurst != hurst.h2 || space_factor.hurst != hurst.h1)
    throw std::invalid_argument("sample_sheet: factors built for different Hurst indices");
  const std::size_t m = time_factor.dimension();
  const std::size_t mp = space_factor.dimension();
  SheetIncrements inc;
  inc.m = m;
  inc.mp = mp;
  inc.horizon_t = horizon_t;
  inc.length_l = length_l;
  inc.hurst = hurst;
  inc.seed = rng_seed;
  Matrix z(m, mp);
  const CounterRng rng(rng_seed);
  rng.fill_normals(z.a.data(), z.a.size(), 0);
  inc.data = apply_lower_transpose_right(apply_lower(time_factor.factor, z), space_factor.factor);
  return inc;
}

inline SheetIncrements sample_sheet(const HurstPair& hurst, std::size_t m,
                                    std::size_t mp, double horizon_t,
                                    double length_l, std::uint64_t rng_seed) {
  const CovFactor time_factor = build_factor(hurst.h2, uniform_edges(horizon_t, m));
  const CovFactor space_factor = build_factor(hurst.h1, uniform_edges(length_l, mp));
  return sample_sheet(time_factor, space_factor, hurst, horizon_t, length_l, rng_seed);
}

/// Integrals of each basis mode over each space cell; entry (j, k-1) =
/// integral of e_k over cell j. Shared by the forcing assembly paths.
inline Matrix cell_integral_table(const Basis& basis, std::size_t mp) {
  if (mp < 1) throw std::invalid_argument("cell_integral_table: need at least one cell");
  Matrix table(mp, basis.n_modes);
  const double h = basis.length_l / static_cast<double>(mp);
  for (std::size_t j = 0; j < mp; ++j) {
    const double a = h * static_cast<double>(j);
    const double b = (j + 1 == mp) ? basis.length_l : h * static_cast<double>(j + 1);
    for (std::size_t k = 1; k <= basis.n_modes; ++k)
      table(j, k - 1) = cell_integral(k, basis.length_l, a, b);
  }
  return table;
}

namespace detail {

/// Index of the time cell whose left-open interval (t_i, t_{i+1}] contains
/// the solver time t_n = n T / n_steps, in exact integer arithmetic.
/// Requires the cell count to divide n_steps.
inline std::size_t wz_time_cell(std::size_t n, std::size_t n_steps, std::size_t m) {
  if (n < 1 || n > n_steps)
    throw std::invalid_argument("wz_time_cell: step outside 1..n_steps");
  if (m == 0 || n_steps % m != 0)
    throw std::invalid_argument("wz_time_cell: cell count must divide the step count");
  return (n * m + n_steps - 1) / n_steps - 1;
}

/// Unscaled projection row: entry k-1 = sum_j data(i_cell, j) *
/// cell_integral(k, cell_j). The same left-to-right summation order is used
/// by the batched assembly in the solver.
inline std::vector<double> wz_projection_row(const SheetIncrements& inc,
                                             const Matrix& table,
                                             std::size_t i_cell) {
  std::vector<double> row(table.cols, 0.0);
  for (std::size_t j = 0; j < inc.mp; ++j) {
    const double w = inc.data(i_cell, j);
    const double* tj = table.row(j);
    for (std::size_t k = 0; k < table.cols; ++k) row[k] += w * tj[k];
  }
  return row;
}

}  // namespace detail

/// Spectral coefficients of the modulated piecewise-constant noise field at
/// solver step n: gamma(t_n) / (tau_cell h_cell) times the projection of the
/// increments in the time cell containing t_n onto each mode.
inline std::vector<double> wz_spectral_forcing(const SheetIncrements& inc,
                                               const Basis& basis,
                                               const GammaSpec& gamma, std::size_t n,
                                               double solver_tau) {
  if (basis.length_l != inc.length_l)
    throw std::invalid_argument("wz_spectral_forcing: basis and sheet domain lengths differ");
  if (!(solver_tau > 0.0))
    throw std::invalid_argument("wz_spectral_forcing: solver_tau must be positive");
  const double steps_real = inc.horizon_t / solver_tau;
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(steps_real));
  if (n_steps < 1 || std::abs(steps_real - static_cast<double>(n_steps)) > 1e-9)
    throw std::invalid_argument("wz_spectral_forcing: solver_tau must divide the horizon");
  if (n == 0) return std::vector<double>(basis.n_modes, 0.0);
  const std::size_t i_cell = detail::wz_time_cell(n, n_steps, inc.m);
  const Matrix table = cell_integral_table(basis, inc.mp);
  std::vector<double> row = detail::wz_projection_row(inc, table, i_cell);
  const double t_n = solver_tau * static_cast<double>(n);
  const double scale = eval_gamma(gamma, t_n) / (inc.tau_cell() * inc.h_cell());
  for (double& v : row) v *= scale;
  return row;
}

/// Block-sums increments into coarser cells; exact by additivity of
/// rectangle increments. The factors must divide the cell counts.
inline SheetIncrements coarsen(const SheetIncrements& inc, std::size_t factor_t,
                               std::size_t factor_x) {
  if (factor_t == 0 || factor_x == 0 || inc.m % factor_t != 0 || inc.mp % factor_x != 0)
    throw std::invalid_argument("coarsen: factors must divide the cell counts");
  SheetIncrements out;
  out.m = inc.m / factor_t;
  out.mp = inc.mp / factor_x;
  out.horizon_t = inc.horizon_t;
  out.length_l = inc.length_l;
  out.hurst = inc.hurst;
  out.seed = inc.seed;
  out.data = Matrix(out.m, out.mp);
  for (std::size_t i = 0; i < out.m; ++i) {
    for (std::size_t bi = 0; bi < factor_t; ++bi) {
      const double* src = inc.data.row(i * factor_t + bi);
      double* dst = out.data.row(i);
      for (std::size_t j = 0; j < out.mp; ++j)
        for (std::size_t bj = 0; bj < factor_x; ++bj)
          dst[j] += src[j * factor_x + bj];
    }
  }
  return out;
}

}  // namespace fcable
