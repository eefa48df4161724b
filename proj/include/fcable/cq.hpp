#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fcable {

/// Backward-Euler convolution quadrature weights for a fractional
/// derivative of order gamma_exp on a uniform grid of step tau.
///
/// The weights are the power series coefficients of ((1 - z) / tau)^gamma_exp,
/// so d[0] = tau^-gamma_exp and d[i] = d[i-1] * (i - 1 - gamma_exp) / i.
/// For gamma_exp in (0, 1) this gives d[0] > 0 and d[i] < 0 for i >= 1; for
/// gamma_exp in (-1, 0) all weights are positive (a fractional integral).
struct CqWeights {
  double gamma_exp = 0.0;
  double tau = 0.0;
  std::vector<double> d;
};

/// Builds n+1 weights d[0..n]. Requires gamma_exp in (-1, 1] and tau > 0.
inline CqWeights cq_weights(double gamma_exp, double tau, std::size_t n) {
  if (!(gamma_exp > -1.0 && gamma_exp <= 1.0))
    throw std::invalid_argument("cq_weights: gamma_exp must lie in (-1, 1]");
  if (!(tau > 0.0)) throw std::invalid_argument("cq_weights: tau must be positive");
  CqWeights w;
  w.gamma_exp = gamma_exp;
  w.tau = tau;
  w.d.resize(n + 1);
  w.d[0] = std::pow(tau, -gamma_exp);
  for (std::size_t i = 1; i <= n; ++i)
    w.d[i] = w.d[i - 1] * (static_cast<double>(i) - 1.0 - gamma_exp) / static_cast<double>(i);
  return w;
}

/// Discrete fractional derivative at step upto for a history of coefficient
/// vectors. history[i] holds the solution at time t_{i+1}; the value at t_0
/// never enters (zero initial data). Returns sum_{i=0}^{upto-1} d[i] *
/// history[upto-1-i].
inline std::vector<double> cq_apply_history(
    const CqWeights& w, const std::vector<std::vector<double>>& history,
    std::size_t upto) {
  if (upto == 0) throw std::invalid_argument("cq_apply_history: upto must be positive");
  if (upto > history.size())
    throw std::invalid_argument("cq_apply_history: upto exceeds history length");
  if (upto > w.d.size())
    throw std::invalid_argument("cq_apply_history: upto exceeds weight count");
  const std::size_t dim = history[0].size();
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < upto; ++i) {
    const std::vector<double>& v = history[upto - 1 - i];
    if (v.size() != dim)
      throw std::invalid_argument("cq_apply_history: ragged history");
    const double di = w.d[i];
    for (std::size_t q = 0; q < dim; ++q) out[q] += di * v[q];
  }
  return out;
}

/// Sum of all stored weights scaled by tau^gamma_exp; decays like
/// c * n^-gamma_exp for gamma_exp in (0, 1).
inline double cq_checksum_partial_sums(const CqWeights& w) {
  double sum = 0.0;
  for (double v : w.d) sum += v;
  return sum * std::pow(w.tau, w.gamma_exp);
}

}  // namespace fcable
