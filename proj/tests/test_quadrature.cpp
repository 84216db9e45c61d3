#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "vmsm/quadrature.hpp"

using namespace vmsm;

namespace {

std::vector<double> sample(int count, double h, double (*f)(double)) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = f(i * h);
  return v;
}

double log_slope(const std::vector<double>& hs, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(StartingWeights, TwoStep) {
  const Matrix w = starting_weights(2);
  EXPECT_NEAR(w(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(w(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(w(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(w(1, 1), 2.0, 1e-15);
}

TEST(StartingWeights, OneStepIsRectangle) {
  const Matrix w = starting_weights(1);
  ASSERT_EQ(w.rows(), 1u);
  EXPECT_DOUBLE_EQ(w(0, 0), 1.0);
}

TEST(StartingWeights, ThreeStepSimpsonAndLastRow) {
  const Matrix w = starting_weights(3);
  EXPECT_NEAR(w(1, 0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(w(1, 1), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(w(1, 2), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(w(2, 0), 0.75, 1e-14);
  EXPECT_NEAR(w(2, 1), 0.0, 1e-14);
  EXPECT_NEAR(w(2, 2), 2.25, 1e-14);
}

TEST(StartingWeights, MomentIdentities) {
  for (int m = 1; m <= 8; ++m) {
    const Matrix w = starting_weights(m);
    for (int r = 1; r <= m; ++r)
      for (int q = 0; q < m; ++q) {
        double lhs = 0.0;
        for (int s = 0; s < m; ++s) lhs += w(r - 1, s) * std::pow(s, q);
        const double rhs = std::pow(r, q + 1) / (q + 1);
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, rhs)) << "m=" << m << " r=" << r << " q=" << q;
      }
  }
}

TEST(StartingWeights, RangeChecked) {
  EXPECT_THROW(starting_weights(0), Error);
  EXPECT_THROW(starting_weights(9), Error);
}

TEST(RunningWeights, Ab2PatternMatchesComposite) {
  const auto table = running_weights(builtin("ab2"), 12);
  for (int n = 4; n <= 12; ++n) {
    EXPECT_NEAR(table.weight(n, 0), 0.0, 1e-14);
    EXPECT_NEAR(table.weight(n, 1), 1.5, 1e-14);
    for (int s = 2; s <= n - 2; ++s) EXPECT_NEAR(table.weight(n, s), 1.0, 1e-14);
    EXPECT_NEAR(table.weight(n, n - 1), 1.5, 1e-14);
    EXPECT_EQ(table.weight(n, n), 0.0);
  }
  EXPECT_NEAR(table.weight(3, 1), 1.5, 1e-14);
  EXPECT_NEAR(table.weight(3, 2), 1.5, 1e-14);
}

TEST(RunningWeights, Bdf1IsRectangleRule) {
  const auto table = running_weights(builtin("bdf1"), 5);
  EXPECT_TRUE(skips_start_block(builtin("bdf1")));
  for (int n = 1; n <= 5; ++n) {
    EXPECT_EQ(table.weight(n, 0), 0.0);
    for (int s = 1; s <= n; ++s) EXPECT_DOUBLE_EQ(table.weight(n, s), 1.0);
  }
}

TEST(RunningWeights, NystromGammaAlternates) {
  const auto table = running_weights(builtin("nystrom2"), 20);
  const auto g = table.gamma();
  for (std::size_t k = 0; k < 20; ++k) EXPECT_DOUBLE_EQ(g[k], k % 2 == 0 ? 2.0 : 0.0);
  for (int n = 3; n <= 20; ++n)
    for (int s = 2; s <= n - 1; ++s) EXPECT_DOUBLE_EQ(table.weight(n, s), g[static_cast<std::size_t>(n - 1 - s)]);
}

TEST(RunningWeights, StartColumnsSatisfyConvolutionRecursion) {
  for (auto name : kBuiltinMethodNames) {
    const auto method = builtin(name);
    const int N = 60;
    const auto table = WeightTable::build(method, N);
    const auto alpha = alpha_polynomial(method);
    const auto beta = beta_polynomial(method);
    for (int s = 0; s < method.m; ++s) {
      const auto col = table.start_column(s);
      for (int n = method.m; n <= N; ++n) {
        double lhs = 0.0;
        for (int t = std::max(0, n - method.m); t <= n; ++t)
          lhs += alpha.coeff(static_cast<std::size_t>(n - t)) * col[static_cast<std::size_t>(t)];
        const double rhs = n - method.mu - s >= 0 ? beta.coeff(static_cast<std::size_t>(n - method.mu - s)) : 0.0;
        EXPECT_NEAR(lhs, rhs, 1e-12) << name << " s=" << s << " n=" << n;
      }
    }
  }
}

TEST(RunningWeights, NonAdmittedMethodRejected) {
  for (const char* name : {"am1", "milne_simpson2"}) {
    try {
      running_weights(builtin(name), 16);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MethodNotAdmitted);
    }
  }
}

TEST(RunningWeights, UniformBoundAcrossGridSizes) {
  for (auto name : kBuiltinMethodNames) {
    const auto method = builtin(name);
    const double small = WeightTable::build(method, 64).sup_abs();
    const double large = WeightTable::build(method, 4096).sup_abs();
    EXPECT_GT(small, 0.0) << name;
    EXPECT_LT(large, 10.0 * small) << name;
  }
}

TEST(IntegrateForward, ConstantsExact) {
  const std::vector<double> psi(10, 1.0);  // ab2, n = 10: psi_0..psi_9
  const auto r = integrate_forward(builtin("ab2"), psi, 0.1);
  EXPECT_NEAR(r.recursion, 1.0, 1e-14);
  EXPECT_NEAR(r.weight_form, 1.0, 1e-14);
}

TEST(IntegrateForward, MidpointExactForLinears) {
  const int N = 32;
  const double h = 1.0 / N;
  const auto psi = sample(N, h, [](double y) { return y; });  // psi_0..psi_{N-1}
  const auto r = integrate_forward(builtin("nystrom2"), psi, h);
  EXPECT_NEAR(r.recursion, 0.5, 1e-14);
  EXPECT_NEAR(r.weight_form, 0.5, 1e-14);
}

TEST(IntegrateForward, Bdf4ExponentialConvergesAtOrderFour) {
  std::vector<double> hs, errs;
  for (int N : {16, 32, 64, 128, 256}) {
    const double h = 1.0 / N;
    const auto psi = sample(N + 1, h, [](double y) { return std::exp(y); });
    const auto r = integrate_forward(builtin("bdf4"), psi, h);
    hs.push_back(h);
    errs.push_back(std::abs(r.weight_form - (std::exp(1.0) - 1.0)));
  }
  const double slope = log_slope(hs, errs);
  EXPECT_GE(slope, 3.8);
  EXPECT_LE(slope, 4.2);
}

TEST(IntegrateForward, EmpiricalOrderEqualsP0) {
  for (auto name : kBuiltinMethodNames) {
    const auto method = builtin(name);
    // Two-step start rule limits Milne-Simpson to third order.
    if (method.p0 > std::max(method.m, 2)) continue;
    // Finest local slope whose errors stay clear of rounding.
    double slope = 0.0, prev = 0.0;
    for (int N = 8; N <= 1024; N *= 2) {
      const double h = 1.0 / N;
      const auto psi = sample(N - method.mu + 1, h, [](double y) { return std::exp(y); });
      const double err = std::abs(integrate_forward(method, psi, h).weight_form - (std::exp(1.0) - 1.0));
      if (err < 1e-12) break;
      if (prev > 0.0) slope = std::log2(prev / err);
      prev = err;
    }
    EXPECT_NEAR(slope, method.p0, 0.2) << name;
  }
}

TEST(IntegrateForward, TooShortInputRejected) {
  const std::vector<double> psi{1.0, 1.0};
  try {
    integrate_forward(builtin("bdf4"), psi, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(IntegrateForward, RecursionAndWeightFormAgreeOnRandomSequences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(5, 200);
  for (int trial = 0; trial < 100; ++trial) {
    const int count = len(rng);
    std::vector<double> psi(static_cast<std::size_t>(count));
    for (auto& v : psi) v = u(rng);
    const double h = 1.0 / count;
    for (auto name : kBuiltinMethodNames) {
      const auto method = builtin(name);
      if (count < method.m + 1) continue;
      const auto r = integrate_forward(method, psi, h);
      EXPECT_NEAR(r.recursion, r.weight_form, 1e-12 * std::max(1.0, std::abs(r.recursion)))
          << name << " trial " << trial;
    }
  }
}

TEST(LocalTruncationError, PolynomialsBelowOrderAreExact) {
  for (auto name : kBuiltinMethodNames) {
    const auto method = builtin(name);
    const int q = method.p0 - 1;
    auto psi = [q](double y) { return std::pow(y, q); };
    auto phi = [q](double y) { return std::pow(y, q + 1) / (q + 1); };
    EXPECT_NEAR(local_truncation_error(method, psi, phi, 0.3, 0.1), 0.0, 1e-12) << name;
  }
}

TEST(LocalTruncationError, DegreeP0IsNotExact) {
  for (auto name : kBuiltinMethodNames) {
    const auto method = builtin(name);
    const int q = method.p0;
    auto psi = [q](double y) { return std::pow(y, q); };
    auto phi = [q](double y) { return std::pow(y, q + 1) / (q + 1); };
    EXPECT_GT(std::abs(local_truncation_error(method, psi, phi, 0.3, 0.1)), 1e-12) << name;
  }
}

TEST(LocalTruncationError, Ab2SineRate) {
  const auto method = builtin("ab2");
  auto psi = [](double y) { return std::sin(y); };
  auto phi = [](double y) { return -std::cos(y); };
  const double e1 = local_truncation_error(method, psi, phi, 0.2, 0.01);
  const double e2 = local_truncation_error(method, psi, phi, 0.2, 0.005);
  EXPECT_NEAR(e1 / e2, 8.0, 8.0 * 0.15);
}
