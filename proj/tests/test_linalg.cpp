#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fcable/linalg.hpp"

using namespace fcable;

TEST_CASE("tridiagonal eigensolver on a 2x2 matrix", "[linalg]") {
  std::vector<double> values, first;
  sym_tridiag_eigen({2.0, 2.0}, {1.0}, values, first);
  REQUIRE(values.size() == 2);
  CHECK(values[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(values[1] == Catch::Approx(3.0).margin(1e-12));
  CHECK(first[0] * first[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(first[1] * first[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("tridiagonal eigensolver preserves trace and Frobenius norm", "[linalg]") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const std::size_t n = 24;
  std::vector<double> diag(n), off(n - 1);
  for (auto& v : diag) v = dist(gen);
  for (auto& v : off) v = dist(gen);
  double trace = 0.0, frob = 0.0;
  for (double v : diag) {
    trace += v;
    frob += v * v;
  }
  for (double v : off) frob += 2.0 * v * v;

  std::vector<double> values, first;
  sym_tridiag_eigen(diag, off, values, first);
  double sum = 0.0, sumsq = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += values[i];
    sumsq += values[i] * values[i];
    weight += first[i] * first[i];
    if (i > 0) CHECK(values[i] >= values[i - 1]);
  }
  CHECK(sum == Catch::Approx(trace).margin(1e-10));
  CHECK(sumsq == Catch::Approx(frob).margin(1e-9));
  CHECK(weight == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("banded Cholesky recovers a planted factor", "[linalg]") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  const std::size_t n = 16, bw = 3;
  BandedLower planted(n, bw);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = (i > bw) ? i - bw : 0;
    for (std::size_t j = j0; j < i; ++j) planted.at(i, j) = dist(gen) - 0.5;
    planted.at(i, i) = 1.0 + dist(gen);
  }
  BandedLower c(n, bw);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = (i > bw) ? i - bw : 0;
    for (std::size_t j = j0; j <= i; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p <= j; ++p) sum += planted.get(i, p) * planted.get(j, p);
      c.at(i, j) = sum;
    }
  }
  REQUIRE(cholesky_banded(c));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = (i > bw) ? i - bw : 0;
    for (std::size_t j = j0; j <= i; ++j)
      CHECK(c.get(i, j) == Catch::Approx(planted.get(i, j)).margin(1e-12));
  }
}

TEST_CASE("banded Cholesky rejects an indefinite matrix", "[linalg]") {
  BandedLower c(2, 1);
  c.at(0, 0) = 1.0;
  c.at(1, 0) = 2.0;
  c.at(1, 1) = 1.0;
  CHECK_FALSE(cholesky_banded(c));
}

TEST_CASE("banded apply matches dense multiplication", "[linalg]") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const std::size_t n = 9, bw = 2, cols = 4;
  BandedLower l(n, bw);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = (i > bw) ? i - bw : 0;
    for (std::size_t j = j0; j <= i; ++j) l.at(i, j) = dist(gen);
  }
  Matrix x(n, cols);
  for (auto& v : x.a) v = dist(gen);
  Matrix z(cols, n);
  for (auto& v : z.a) v = dist(gen);

  const Matrix y = apply_lower(l, x);
  const Matrix w = apply_lower_transpose_right(z, l);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < cols; ++q) {
      double direct = 0.0;
      for (std::size_t j = 0; j < n; ++j) direct += l.get(i, j) * x(j, q);
      CHECK(y(i, q) == Catch::Approx(direct).margin(1e-13));
    }
  }
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double direct = 0.0;
      for (std::size_t j = 0; j < n; ++j) direct += z(i, j) * l.get(k, j);
      CHECK(w(i, k) == Catch::Approx(direct).margin(1e-13));
    }
  }
}
