#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fcable/basis.hpp"
#include "fcable/model.hpp"
#include "fcable/noise.hpp"

using namespace fcable;

namespace {

Matrix dense_covariance(double H, const std::vector<double>& edges) {
  const std::size_t m = edges.size() - 1;
  Matrix c(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      c(i, j) = increment_covariance_1d(H, edges[i], edges[i + 1], edges[j], edges[j + 1]);
  return c;
}

double simpson(const std::vector<double>& f, double a, double b) {
  const std::size_t n = f.size() - 1;
  double acc = f[0] + f[n];
  for (std::size_t i = 1; i < n; ++i) acc += f[i] * ((i % 2 == 1) ? 4.0 : 2.0);
  return acc * (b - a) / (3.0 * static_cast<double>(n));
}

}  // namespace

TEST_CASE("increment covariance closed forms", "[noise]") {
  CHECK(increment_covariance_1d(0.5, 0.25, 0.75, 0.25, 0.75) == Catch::Approx(0.5));
  CHECK(increment_covariance_1d(0.5, 0.0, 1.0, 1.0, 2.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(increment_covariance_1d(0.5, 0.0, 1.0, 3.0, 7.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(increment_covariance_1d(0.3, 0.0, 1.0, 0.0, 1.0) == Catch::Approx(1.0));
  CHECK(increment_covariance_1d(0.2, 0.0, 1.0, 0.0, 1.0) == Catch::Approx(1.0));
  CHECK_THAT(increment_covariance_1d(0.3, 0.0, 1.0, 1.0, 2.0),
             Catch::Matchers::WithinAbs(-0.2421417167448009, 1e-12));
}

TEST_CASE("increment covariance symmetry and scaling", "[noise]") {
  const double v1 = increment_covariance_1d(0.4, 0.1, 0.9, 0.5, 1.7);
  const double v2 = increment_covariance_1d(0.4, 0.5, 1.7, 0.1, 0.9);
  CHECK(v1 == v2);

  const double base = increment_covariance_1d(0.35, 0.0, 1.0, 0.5, 2.0);
  const double scaled = increment_covariance_1d(0.35, 0.0, 3.0, 1.5, 6.0);
  CHECK_THAT(scaled, Catch::Matchers::WithinRel(std::pow(3.0, 0.7) * base, 1e-12));
}

TEST_CASE("increment covariance rejects invalid input", "[noise]") {
  CHECK_THROWS_AS(increment_covariance_1d(0.0, 0.0, 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(increment_covariance_1d(0.6, 0.0, 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(increment_covariance_1d(0.5, 1.0, 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(increment_covariance_1d(0.5, 0.0, 1.0, 2.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(increment_covariance_1d(0.5, -0.1, 1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("independent increments give a diagonal factor", "[noise]") {
  const CovFactor f = build_factor(0.5, uniform_edges(2.0, 8));
  CHECK(f.dimension() == 8);
  CHECK(f.factor.bw == 0);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK_THAT(f.factor.get(i, i), Catch::Matchers::WithinRel(0.5, 1e-14));
}

TEST_CASE("one-cell factor is the increment standard deviation", "[noise]") {
  const CovFactor f = build_factor(0.4, {0.0, 1.7});
  CHECK(f.dimension() == 1);
  CHECK_THAT(f.factor.get(0, 0), Catch::Matchers::WithinRel(std::pow(1.7, 0.4), 1e-13));
}

TEST_CASE("factor reproduces the dense covariance", "[noise]") {
  const std::vector<double> edges = uniform_edges(8.0, 8);
  const CovFactor f = build_factor(0.3, edges);
  const Matrix c = dense_covariance(0.3, edges);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= std::min(i, j); ++k)
        acc += f.factor.get(i, k) * f.factor.get(j, k);
      CHECK_THAT(acc, Catch::Matchers::WithinAbs(c(i, j), 1e-10));
    }
  }
}

TEST_CASE("factor construction rejects bad edges", "[noise]") {
  CHECK_THROWS_AS(build_factor(0.3, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_factor(0.3, {0.0, 1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(build_factor(0.3, {-1.0, 0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("uniform edges cover the interval", "[noise]") {
  const std::vector<double> e = uniform_edges(2.0, 4);
  REQUIRE(e.size() == 5);
  CHECK(e[0] == 0.0);
  CHECK(e[2] == Catch::Approx(1.0));
  CHECK(e[4] == 2.0);
  CHECK_THROWS_AS(uniform_edges(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(uniform_edges(1.0, 0), std::invalid_argument);
}

TEST_CASE("sheet sampling is deterministic in the seed", "[noise]") {
  const HurstPair h{0.4, 0.45};
  const SheetIncrements a = sample_sheet(h, 8, 4, 2.0, 1.0, 1234);
  const SheetIncrements b = sample_sheet(h, 8, 4, 2.0, 1.0, 1234);
  const SheetIncrements c = sample_sheet(h, 8, 4, 2.0, 1.0, 1235);
  REQUIRE(a.data.a.size() == 32);
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < a.data.a.size(); ++i) {
    all_equal = all_equal && (a.data.a[i] == b.data.a[i]);
    any_diff = any_diff || (a.data.a[i] != c.data.a[i]);
  }
  CHECK(all_equal);
  CHECK(any_diff);
  CHECK(a.tau_cell() == Catch::Approx(0.25));
  CHECK(a.h_cell() == Catch::Approx(0.25));
}

TEST_CASE("sheet sampling rejects mismatched factors", "[noise]") {
  const HurstPair h{0.4, 0.45};
  const CovFactor ft = build_factor(0.45, uniform_edges(1.0, 4));
  const CovFactor fx = build_factor(0.4, uniform_edges(1.0, 4));
  CHECK_NOTHROW(sample_sheet(ft, fx, h, 1.0, 1.0, 7));
  CHECK_THROWS_AS(sample_sheet(fx, ft, h, 1.0, 1.0, 7), std::invalid_argument);
}

TEST_CASE("single-cell sheet increments are standard normal", "[noise]") {
  const HurstPair h{0.5, 0.5};
  const CovFactor ft = build_factor(0.5, uniform_edges(1.0, 1));
  const CovFactor fx = build_factor(0.5, uniform_edges(1.0, 1));
  const std::size_t n = 20000;
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SheetIncrements s = sample_sheet(ft, fx, h, 1.0, 1.0, 900 + i);
    mean += s.data(0, 0);
    var += s.data(0, 0) * s.data(0, 0);
  }
  mean /= static_cast<double>(n);
  var = var / static_cast<double>(n) - mean * mean;
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.03));
  CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 0.05));
}

TEST_CASE("time cell lookup follows left-open cells", "[noise]") {
  CHECK(detail::wz_time_cell(1, 8, 8) == 0);
  CHECK(detail::wz_time_cell(8, 8, 8) == 7);
  CHECK(detail::wz_time_cell(1, 8, 4) == 0);
  CHECK(detail::wz_time_cell(2, 8, 4) == 0);
  CHECK(detail::wz_time_cell(3, 8, 4) == 1);
  CHECK(detail::wz_time_cell(4, 8, 4) == 1);
  CHECK(detail::wz_time_cell(5, 8, 4) == 2);
  CHECK(detail::wz_time_cell(8, 8, 4) == 3);
  CHECK_THROWS_AS(detail::wz_time_cell(0, 8, 4), std::invalid_argument);
  CHECK_THROWS_AS(detail::wz_time_cell(9, 8, 4), std::invalid_argument);
  CHECK_THROWS_AS(detail::wz_time_cell(2, 8, 3), std::invalid_argument);
}

TEST_CASE("vanishing modulation yields zero forcing", "[noise]") {
  const HurstPair h{0.5, 0.5};
  const SheetIncrements s = sample_sheet(h, 4, 4, 1.0, 1.0, 5);
  const Basis basis(1.0, 6);
  const std::vector<double> f =
      wz_spectral_forcing(s, basis, GammaSpec{GammaKind::zero, 1.0}, 2, 0.25);
  for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("single-cell forcing matches the closed form", "[noise]") {
  const HurstPair h{0.5, 0.5};
  const SheetIncrements s = sample_sheet(h, 1, 1, 1.0, 1.0, 11);
  const Basis basis(1.0, 4);
  const GammaSpec gamma{GammaKind::poly_t, 0.7};
  const std::size_t n = 3;
  const double tau = 0.25;
  const std::vector<double> f = wz_spectral_forcing(s, basis, gamma, n, tau);
  const double z = s.data(0, 0);
  const double g = eval_gamma(gamma, tau * static_cast<double>(n));
  for (std::size_t k = 1; k <= 4; ++k)
    CHECK_THAT(f[k - 1],
               Catch::Matchers::WithinRel(z * g * cell_integral(k, 1.0, 0.0, 1.0), 1e-13) ||
                   Catch::Matchers::WithinAbs(0.0, 1e-15));
}

TEST_CASE("forcing is linear in the sheet data", "[noise]") {
  const HurstPair h{0.4, 0.3};
  const SheetIncrements a = sample_sheet(h, 4, 8, 1.0, 2.0, 21);
  const SheetIncrements b = sample_sheet(h, 4, 8, 1.0, 2.0, 22);
  SheetIncrements sum = a;
  for (std::size_t i = 0; i < sum.data.a.size(); ++i) sum.data.a[i] += b.data.a[i];
  const Basis basis(2.0, 8);
  const GammaSpec gamma{GammaKind::sin_t, 1.1};
  const std::vector<double> fa = wz_spectral_forcing(a, basis, gamma, 5, 0.125);
  const std::vector<double> fb = wz_spectral_forcing(b, basis, gamma, 5, 0.125);
  const std::vector<double> fs = wz_spectral_forcing(sum, basis, gamma, 5, 0.125);
  for (std::size_t k = 0; k < 8; ++k)
    CHECK_THAT(fs[k], Catch::Matchers::WithinAbs(fa[k] + fb[k], 1e-14));
}

TEST_CASE("forcing matches a dense quadrature oracle", "[noise]") {
  const HurstPair h{0.4, 0.45};
  const SheetIncrements s = sample_sheet(h, 4, 4, 1.0, 1.0, 77);
  const Basis basis(1.0, 8);
  const GammaSpec gamma{GammaKind::poly_t, 1.3};
  const std::size_t n = 3;
  const double tau = 0.125;
  const std::vector<double> f = wz_spectral_forcing(s, basis, gamma, n, tau);

  const std::size_t i_cell = 1;  // t_3 = 0.375 lies in (0.25, 0.5]
  const double scale = eval_gamma(gamma, tau * static_cast<double>(n)) /
                       (s.tau_cell() * s.h_cell());
  for (std::size_t k = 1; k <= 8; ++k) {
    double proj = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double a = 0.25 * static_cast<double>(j);
      const double b = 0.25 * static_cast<double>(j + 1);
      std::vector<double> vals(1025);
      for (std::size_t q = 0; q < vals.size(); ++q) {
        const double x = a + (b - a) * static_cast<double>(q) / 1024.0;
        vals[q] = eigenfunction(k, 1.0, x);
      }
      proj += s.data(i_cell, j) * simpson(vals, a, b);
    }
    CHECK_THAT(f[k - 1], Catch::Matchers::WithinAbs(scale * proj, 1e-8));
  }
}

TEST_CASE("forcing validates its inputs", "[noise]") {
  const HurstPair h{0.5, 0.5};
  const SheetIncrements s = sample_sheet(h, 4, 4, 1.0, 1.0, 3);
  const Basis basis(1.0, 4);
  const Basis wrong(2.0, 4);
  const GammaSpec gamma{GammaKind::poly_t, 1.0};
  CHECK_THROWS_AS(wz_spectral_forcing(s, wrong, gamma, 1, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(wz_spectral_forcing(s, basis, gamma, 1, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(wz_spectral_forcing(s, basis, gamma, 1, -0.25), std::invalid_argument);
  const std::vector<double> zero = wz_spectral_forcing(s, basis, gamma, 0, 0.25);
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("coarsening block-sums increments", "[noise]") {
  const HurstPair h{0.4, 0.45};
  const SheetIncrements fine = sample_sheet(h, 4, 4, 1.0, 2.0, 31);

  const SheetIncrements same = coarsen(fine, 1, 1);
  for (std::size_t i = 0; i < fine.data.a.size(); ++i)
    CHECK(same.data.a[i] == fine.data.a[i]);

  const SheetIncrements half = coarsen(fine, 2, 2);
  REQUIRE(half.m == 2);
  REQUIRE(half.mp == 2);
  CHECK(half.horizon_t == fine.horizon_t);
  CHECK(half.length_l == fine.length_l);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double expect = 0.0;
      for (std::size_t bi = 0; bi < 2; ++bi)
        for (std::size_t bj = 0; bj < 2; ++bj)
          expect += fine.data(2 * i + bi, 2 * j + bj);
      CHECK_THAT(half.data(i, j), Catch::Matchers::WithinRel(expect, 1e-12) ||
                                      Catch::Matchers::WithinAbs(expect, 1e-15));
    }
  }

  const SheetIncrements two_pass = coarsen(coarsen(fine, 2, 1), 1, 2);
  for (std::size_t i = 0; i < half.data.a.size(); ++i)
    CHECK_THAT(two_pass.data.a[i], Catch::Matchers::WithinAbs(half.data.a[i], 1e-13));

  CHECK_THROWS_AS(coarsen(fine, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(coarsen(fine, 0, 1), std::invalid_argument);
}

TEST_CASE("coarsening preserves the total increment", "[noise]") {
  const HurstPair h{0.3, 0.25};
  const SheetIncrements fine = sample_sheet(h, 8, 8, 1.0, 1.0, 99);
  const SheetIncrements coarse = coarsen(fine, 4, 2);
  double sum_fine = 0.0, sum_coarse = 0.0;
  for (double v : fine.data.a) sum_fine += v;
  for (double v : coarse.data.a) sum_coarse += v;
  CHECK_THAT(sum_coarse, Catch::Matchers::WithinAbs(sum_fine, 1e-12));
}

TEST_CASE("cell integral table covers the domain", "[noise]") {
  const Basis basis(2.0, 4);
  const Matrix table = cell_integral_table(basis, 4);
  REQUIRE(table.rows == 4);
  REQUIRE(table.cols == 4);
  for (std::size_t k = 1; k <= 4; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 4; ++j) acc += table(j, k - 1);
    CHECK_THAT(acc, Catch::Matchers::WithinAbs(cell_integral(k, 2.0, 0.0, 2.0), 1e-14));
  }
  CHECK_THROWS_AS(cell_integral_table(basis, 0), std::invalid_argument);
}
