#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fcable {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }
};

/// Lower-triangular matrix with bandwidth bw, packed by rows.
///
/// Row i stores the entries (i, i-bw) .. (i, i) contiguously; bw = n-1 is a
/// full lower triangle. Entries outside the band are implicitly zero.
struct BandedLower {
  std::size_t n = 0;
  std::size_t bw = 0;
  std::vector<double> a;

  BandedLower() = default;
  BandedLower(std::size_t n_, std::size_t bw_)
      : n(n_), bw(bw_), a(n_ * (bw_ + 1), 0.0) {}

  std::size_t width() const { return bw + 1; }

  double& at(std::size_t i, std::size_t j) { return a[i * width() + bw + j - i]; }

  double get(std::size_t i, std::size_t j) const {
    if (j > i || i - j > bw) return 0.0;
    return a[i * width() + bw + j - i];
  }
};

/// In-place Cholesky of a symmetric positive definite band matrix.
///
/// On entry c holds the lower band of the matrix; on success it holds the
/// Cholesky factor L with the same bandwidth. Returns false if a pivot is
/// not strictly positive.
inline bool cholesky_banded(BandedLower& c) {
  const std::size_t n = c.n;
  const std::size_t bw = c.bw;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = (i > bw) ? i - bw : 0;
    for (std::size_t j = j0; j <= i; ++j) {
      double sum = c.at(i, j);
      const std::size_t p0 = (i > bw) ? i - bw : 0;
      const std::size_t p1 = (j > bw) ? j - bw : 0;
      const std::size_t pstart = std::max(p0, p1);
      for (std::size_t p = pstart; p < j; ++p) sum -= c.at(i, p) * c.at(j, p);
      if (j < i) {
        c.at(i, j) = sum / c.at(j, j);
      } else {
        if (!(sum > 0.0)) return false;
        c.at(i, i) = std::sqrt(sum);
      }
    }
  }
  return true;
}

/// Y = L * X for a banded lower factor L (n x n) and row-major X (n x c).
inline Matrix apply_lower(const BandedLower& l, const Matrix& x) {
  if (x.rows != l.n) throw std::invalid_argument("apply_lower: row count mismatch");
  Matrix y(x.rows, x.cols);
  for (std::size_t i = 0; i < l.n; ++i) {
    const std::size_t j0 = (i > l.bw) ? i - l.bw : 0;
    double* yi = y.row(i);
    for (std::size_t j = j0; j <= i; ++j) {
      const double lij = l.get(i, j);
      if (lij == 0.0) continue;
      const double* xj = x.row(j);
      for (std::size_t q = 0; q < x.cols; ++q) yi[q] += lij * xj[q];
    }
  }
  return y;
}

/// W = Y * L^T for row-major Y (r x n) and banded lower factor L (n x n).
inline Matrix apply_lower_transpose_right(const Matrix& y, const BandedLower& l) {
  if (y.cols != l.n) throw std::invalid_argument("apply_lower_transpose_right: column count mismatch");
  Matrix w(y.rows, l.n);
  for (std::size_t i = 0; i < y.rows; ++i) {
    const double* yi = y.row(i);
    double* wi = w.row(i);
    for (std::size_t k = 0; k < l.n; ++k) {
      const std::size_t j0 = (k > l.bw) ? k - l.bw : 0;
      double sum = 0.0;
      for (std::size_t j = j0; j <= k; ++j) sum += yi[j] * l.get(k, j);
      wi[k] = sum;
    }
  }
  return w;
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit-shift QL.
///
/// diag holds the n diagonal entries and offdiag the n-1 off-diagonal ones.
/// On return values holds the eigenvalues in ascending order and
/// first_components the first component of each normalized eigenvector,
/// matched by index. Throws std::runtime_error if the iteration stalls.
inline void sym_tridiag_eigen(std::vector<double> diag, std::vector<double> offdiag,
                              std::vector<double>& values,
                              std::vector<double>& first_components) {
  const std::size_t n = diag.size();
  if (n == 0) throw std::invalid_argument("sym_tridiag_eigen: empty matrix");
  if (offdiag.size() + 1 != n && n > 1)
    throw std::invalid_argument("sym_tridiag_eigen: offdiagonal size mismatch");

  std::vector<double>& d = diag;
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = offdiag[i];
  std::vector<double> z(n, 0.0);
  z[0] = 1.0;

  constexpr int kMaxIter = 60;
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == kMaxIter)
          throw std::runtime_error("sym_tridiag_eigen: QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (r == 0.0 && m > l + 1) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  values.resize(n);
  first_components.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = d[order[i]];
    first_components[i] = z[order[i]];
  }
}

}  // namespace fcable
