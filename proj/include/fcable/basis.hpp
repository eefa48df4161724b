#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fcable {

/// Dirichlet-Laplacian eigenvalue rho_k = (k pi / l)^2, k >= 1.
inline double eigenvalue(std::size_t k, double length_l) {
  if (k < 1) throw std::invalid_argument("eigenvalue: k must be >= 1");
  if (!(length_l > 0.0)) throw std::invalid_argument("eigenvalue: l must be positive");
  const double w = static_cast<double>(k) * std::numbers::pi / length_l;
  return w * w;
}

/// Normalized eigenfunction e_k(x) = sqrt(2/l) sin(k pi x / l) on [0, l].
inline double eigenfunction(std::size_t k, double length_l, double x) {
  if (k < 1) throw std::invalid_argument("eigenfunction: k must be >= 1");
  if (!(length_l > 0.0)) throw std::invalid_argument("eigenfunction: l must be positive");
  if (!(x >= 0.0 && x <= length_l))
    throw std::invalid_argument("eigenfunction: x outside [0, l]");
  return std::sqrt(2.0 / length_l) *
         std::sin(static_cast<double>(k) * std::numbers::pi * x / length_l);
}

/// Exact integral of e_k over [a, b] within [0, l].
inline double cell_integral(std::size_t k, double length_l, double a, double b) {
  if (k < 1) throw std::invalid_argument("cell_integral: k must be >= 1");
  if (!(length_l > 0.0)) throw std::invalid_argument("cell_integral: l must be positive");
  if (!(a >= 0.0 && a < b && b <= length_l))
    throw std::invalid_argument("cell_integral: need 0 <= a < b <= l");
  const double kpil = static_cast<double>(k) * std::numbers::pi / length_l;
  return std::sqrt(2.0 / length_l) / kpil * (std::cos(kpil * a) - std::cos(kpil * b));
}

/// First N Dirichlet eigenpairs on (0, l); eigenvalues[k-1] = rho_k.
struct Basis {
  double length_l = 0.0;
  std::size_t n_modes = 0;
  std::vector<double> eigenvalues;

  Basis() = default;
  Basis(double l, std::size_t n) : length_l(l), n_modes(n) {
    if (!(l > 0.0)) throw std::invalid_argument("Basis: l must be positive");
    if (n < 1) throw std::invalid_argument("Basis: n_modes must be >= 1");
    eigenvalues.resize(n);
    for (std::size_t k = 1; k <= n; ++k) eigenvalues[k - 1] = eigenvalue(k, l);
  }

  double rho(std::size_t k) const { return eigenvalues.at(k - 1); }
};

/// Weighted squared coefficient norm sum_k rho_k^q v_k^2.
inline double discrete_norm_sq(const std::vector<double>& v, const Basis& basis,
                               double q) {
  if (v.size() != basis.n_modes)
    throw std::invalid_argument("discrete_norm_sq: coefficient length mismatch");
  if (!(q >= 0.0)) throw std::invalid_argument("discrete_norm_sq: order must be >= 0");
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double w = (q == 0.0) ? 1.0 : std::pow(basis.eigenvalues[k], q);
    sum += w * v[k] * v[k];
  }
  return sum;
}

/// Trapezoid-rule projection of grid samples onto the first N modes.
///
/// fvals[j] samples the function at x_j = j * l / (q_pts - 1), j = 0..q_pts-1,
/// endpoints included. Requires at least 4N points; with equispaced points
/// the discrete sine transform is exactly orthogonal for modes up to N.
inline std::vector<double> project_function(const std::vector<double>& fvals,
                                            const Basis& basis) {
  const std::size_t q = fvals.size();
  if (q < 4 * basis.n_modes)
    throw std::invalid_argument("project_function: need at least 4 N sample points");
  const std::size_t segs = q - 1;
  const double h = basis.length_l / static_cast<double>(segs);
  const double norm = std::sqrt(2.0 / basis.length_l);
  std::vector<double> out(basis.n_modes, 0.0);
  for (std::size_t k = 1; k <= basis.n_modes; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j < segs; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(segs);
      acc += fvals[j] * norm * std::sin(static_cast<double>(k) * std::numbers::pi * frac);
    }
    out[k - 1] = acc * h;
  }
  return out;
}

}  // namespace fcable
