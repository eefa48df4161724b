#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fcable/linalg.hpp"

namespace fcable {

/// Nodes and weights of a quadrature rule on (0, inf).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Generalized Gauss-Laguerre rule for the weight x^a e^{-x}, a > -1.
///
/// Built by Golub-Welsch: the Jacobi matrix of the generalized Laguerre
/// polynomials has diagonal 2i + a + 1 and off-diagonal sqrt(i (i + a));
/// nodes are its eigenvalues and weights are Gamma(a+1) times the squared
/// first eigenvector components. The weights sum to Gamma(a+1).
inline QuadratureRule gauss_laguerre_rule(double a, std::size_t n) {
  if (!(a > -1.0)) throw std::invalid_argument("gauss_laguerre_rule: need a > -1");
  if (n < 1) throw std::invalid_argument("gauss_laguerre_rule: need n >= 1");
  std::vector<double> diag(n), offdiag(n > 1 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i)
    diag[i] = 2.0 * static_cast<double>(i) + a + 1.0;
  for (std::size_t i = 1; i < n; ++i)
    offdiag[i - 1] = std::sqrt(static_cast<double>(i) * (static_cast<double>(i) + a));
  std::vector<double> values, first;
  sym_tridiag_eigen(diag, offdiag, values, first);
  QuadratureRule rule;
  rule.nodes = values;
  rule.weights.resize(n);
  const double mu0 = std::tgamma(a + 1.0);
  for (std::size_t i = 0; i < n; ++i) rule.weights[i] = mu0 * first[i] * first[i];
  return rule;
}

}  // namespace fcable
