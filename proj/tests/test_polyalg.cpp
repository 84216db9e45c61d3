#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "vmsm/polyalg.hpp"

using namespace vmsm;

namespace {

double residual_norm(const Matrix& a, const std::vector<double>& x, const std::vector<double>& rhs) {
  const auto ax = a.multiply(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) worst = std::max(worst, std::abs(ax[i] - rhs[i]));
  return worst;
}

Polynomial from_roots(const std::vector<double>& rs) {
  Polynomial p{1.0};
  for (double r : rs) p = p * Polynomial{-r, 1.0};
  return p;
}

std::vector<double> sorted_real_parts(const std::vector<Complex>& zs) {
  std::vector<double> out;
  for (const auto& z : zs) out.push_back(z.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(SolveDense, IdentityReturnsRhs) {
  const std::vector<double> rhs{3.0, 4.0};
  const auto x = solve_dense(Matrix::identity(2), rhs);
  EXPECT_DOUBLE_EQ(x[0], 3.0);
  EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(SolveDense, TrapezoidStartingWeights) {
  Matrix a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 1.0;
  a(1, 0) = 0.0;
  a(1, 1) = 1.0;
  const std::vector<double> rhs{1.0, 0.5};
  const auto x = solve_dense(a, rhs);
  EXPECT_NEAR(x[0], 0.5, 1e-15);
  EXPECT_NEAR(x[1], 0.5, 1e-15);
}

TEST(SolveDense, RandomFiveByFiveRecoversKnownSolution) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) a(i, j) = u(rng) + (i == j ? 3.0 : 0.0);
  const std::vector<double> x_true{1.0, -2.0, 0.5, 3.0, -0.25};
  const auto rhs = a.multiply(x_true);
  const auto x = solve_dense(a, rhs);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(x[i], x_true[i], 1e-10);
}

TEST(SolveDense, SingularMatrixRejected) {
  Matrix a(2, 2, 1.0);
  const std::vector<double> rhs{1.0, 2.0};
  try {
    solve_dense(a, rhs);
    FAIL() << "expected SingularMatrix";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(SolveDense, ResidualBoundOnRandomWellConditionedSystems) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 8);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(dim(rng));
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
    if (condition_inf(a) > 1e6) continue;
    std::vector<double> rhs(n);
    for (auto& v : rhs) v = u(rng);
    const auto x = solve_dense(a, rhs);
    const double bound = 1e-10 * (a.norm_inf() * norm_inf(x) + norm_inf(rhs));
    EXPECT_LE(residual_norm(a, x, rhs), bound);
    ++checked;
  }
  EXPECT_GT(checked, 900);
}

TEST(Roots, SymmetricQuadratic) {
  const auto zs = roots(Polynomial{-1.0, 0.0, 1.0});
  ASSERT_EQ(zs.size(), 2u);
  const auto re = sorted_real_parts(zs);
  EXPECT_NEAR(re[0], -1.0, 1e-12);
  EXPECT_NEAR(re[1], 1.0, 1e-12);
  for (const auto& z : zs) EXPECT_NEAR(z.imag(), 0.0, 1e-12);
}

TEST(Roots, TrapezoidalSigma) {
  const auto zs = roots(Polynomial{0.5, 0.5});
  ASSERT_EQ(zs.size(), 1u);
  EXPECT_NEAR(zs[0].real(), -1.0, 1e-14);
  EXPECT_NEAR(zs[0].imag(), 0.0, 1e-14);
}

TEST(Roots, SimpsonSigmaMatchesQuadraticFormula) {
  const auto zs = roots(Polynomial{1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0});
  const auto re = sorted_real_parts(zs);
  EXPECT_NEAR(re[0], -2.0 - std::sqrt(3.0), 1e-10);
  EXPECT_NEAR(re[1], -2.0 + std::sqrt(3.0), 1e-10);
}

TEST(Roots, ComplexPairAndZeroRoots) {
  // xi^2 (xi^2 + 1)
  const auto zs = roots(Polynomial{0.0, 0.0, 1.0, 0.0, 1.0});
  ASSERT_EQ(zs.size(), 4u);
  int zeros = 0, unit_imag = 0;
  for (const auto& z : zs) {
    if (std::abs(z) < 1e-12) ++zeros;
    if (std::abs(std::abs(z.imag()) - 1.0) < 1e-10 && std::abs(z.real()) < 1e-10) ++unit_imag;
  }
  EXPECT_EQ(zeros, 2);
  EXPECT_EQ(unit_imag, 2);
}

TEST(Roots, ResidualWithinTolerance) {
  const Polynomial p{3.0, -16.0, 36.0, -48.0, 25.0};
  for (const auto& z : roots(p)) EXPECT_LE(std::abs(p(z)), 1e-8 * p.max_abs_coeff());
}

TEST(Roots, RandomPolynomialsFromKnownRoots) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> deg(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = deg(rng);
    std::vector<double> rs;
    // Well-separated real roots so the multiset comparison is unambiguous.
    while (static_cast<int>(rs.size()) < d) {
      const double r = u(rng);
      if (std::all_of(rs.begin(), rs.end(), [&](double q) { return std::abs(q - r) > 0.1; })) rs.push_back(r);
    }
    std::sort(rs.begin(), rs.end());
    const auto zs = roots(from_roots(rs));
    ASSERT_EQ(zs.size(), rs.size());
    const auto re = sorted_real_parts(zs);
    for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_NEAR(re[i], rs[i], 1e-6) << "trial " << trial;
  }
}

TEST(SeriesInverse, GeometricSeries) {
  const auto s = series_inverse(Polynomial{1.0, -1.0}, 4);
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s[i], 1.0);
}

TEST(SeriesInverse, AdamsBashforth2Alpha) {
  const auto s = series_inverse(Polynomial{1.0, -1.0, 0.0}, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s[i], 1.0);
}

TEST(SeriesInverse, AdamsBashforth2Beta) {
  const auto s = series_inverse(Polynomial{1.5, -0.5}, 3);
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(s[2], 2.0 / 27.0, 1e-15);
}

TEST(SeriesInverse, ZeroConstantTermRejected) {
  try {
    series_inverse(Polynomial{0.0, 1.0}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroConstantTerm);
  }
}

TEST(SeriesDivide, SelfDivisionIsUnit) {
  const Polynomial p{2.0, -3.0, 0.5};
  const auto s = series_divide(p, p, 6);
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  for (std::size_t i = 1; i < 6; ++i) EXPECT_NEAR(s[i], 0.0, 1e-14);
}

TEST(SeriesDivide, AdamsBashforth2Gamma) {
  const auto s = series_divide(Polynomial{1.5, -0.5}, Polynomial{1.0, -1.0, 0.0}, 5);
  EXPECT_NEAR(s[0], 1.5, 1e-15);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_NEAR(s[i], 1.0, 1e-15);
}

TEST(SeriesDivide, AdamsBashforth2GammaInverse) {
  // alpha/beta = (1 - xi) / (3/2 - xi/2); recursion gives 2/3, -4/9, -4/27.
  const auto s = series_divide(Polynomial{1.0, -1.0}, Polynomial{1.5, -0.5}, 3);
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], -4.0 / 9.0, 1e-15);
  EXPECT_NEAR(s[2], -4.0 / 27.0, 1e-15);
}

TEST(SeriesProperties, InverseConvolvesToUnit) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> deg(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> c(static_cast<std::size_t>(deg(rng) + 1));
    for (auto& v : c) v = u(rng);
    // Dominant constant term keeps the inverse series bounded over 64 terms.
    c[0] = 2.0 + std::abs(c[0]) + std::accumulate(c.begin() + 1, c.end(), 0.0,
                                                   [](double a, double b) { return a + std::abs(b); });
    const Polynomial p(c);
    const std::size_t n = 64;
    const auto inv = series_inverse(p, n);
    const auto unit = convolve(p.coeffs(), inv.values, n);
    EXPECT_NEAR(unit[0], 1.0, 1e-12);
    for (std::size_t i = 1; i < n; ++i) EXPECT_NEAR(unit[i], 0.0, 1e-12);
  }
}

TEST(SeriesProperties, DivideEqualsMultiplyByInverse) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> num(4), den(3);
    for (auto& v : num) v = u(rng);
    for (auto& v : den) v = u(rng);
    den[0] = 3.0;
    const std::size_t n = 40;
    const auto q = series_divide(Polynomial(num), Polynomial(den), n);
    const auto inv = series_inverse(Polynomial(den), n);
    const auto ref = convolve(Polynomial(num).coeffs(), inv.values, n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(q[i], ref[i], 1e-12 * std::max(1.0, std::abs(ref[i])));
  }
}
