#pragma once

// Linear multistep methods  sum_j a_j phi_{r+j} = h sum_j b_j psi_{r+j}
// applied to phi' = psi: coefficient registry, order and stability analysis,
// and the reflected-coefficient sequences that turn the recurrence into a
// discrete convolution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vmsm/error.hpp"
#include "vmsm/polyalg.hpp"

namespace vmsm {

namespace detail {

inline double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;  // ipow(0, 0) == 1
}

// Largest p <= p_max for which the algebraic order conditions
// sum_j a_j j^q = q sum_j b_j j^{q-1} hold for q = 0..p; 0 if q = 0 or 1 fails.
inline int algebraic_order(std::span<const double> a, std::span<const double> b, int p_max) {
  int order = 0;
  for (int q = 0; q <= p_max; ++q) {
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double jd = static_cast<double>(j);
      lhs += a[j] * ipow(jd, q);
      scale += std::abs(a[j]) * ipow(jd, q);
      if (q > 0) {
        rhs += q * b[j] * ipow(jd, q - 1);
        scale += q * std::abs(b[j]) * ipow(jd, q - 1);
      }
    }
    if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, scale)) break;
    order = q;
  }
  return order;
}

}  // namespace detail

struct MultistepMethod {
  std::string name;
  int m = 0;              ///< step count
  std::vector<double> a;  ///< a_0..a_m
  std::vector<double> b;  ///< b_0..b_m
  int mu = 0;             ///< b_{m-mu} != 0, b_j = 0 for j > m - mu
  int p0 = 0;             ///< maximal consistency order (capped at 12)

  /// Validates the coefficients and derives mu and p0.
  static MultistepMethod create(std::string name, std::vector<double> a, std::vector<double> b) {
    if (a.size() < 2 || a.size() != b.size())
      throw Error(ErrorCode::InvalidArgument, name + ": need m+1 >= 2 coefficients for a and b");
    const int m = static_cast<int>(a.size()) - 1;
    if (a.back() == 0.0) throw Error(ErrorCode::InvalidArgument, name + ": a_m must be nonzero");
    if (a[0] == 0.0 && b[0] == 0.0)
      throw Error(ErrorCode::InvalidArgument, name + ": |a_0| + |b_0| must be nonzero");
    int mu = 0;
    while (mu <= m && b[static_cast<std::size_t>(m - mu)] == 0.0) ++mu;
    if (mu > m) throw Error(ErrorCode::InvalidArgument, name + ": b vanishes identically");

    const int p0 = detail::algebraic_order(a, b, 12);
    if (p0 < 1) throw Error(ErrorCode::Inconsistent, name + ": order conditions fail for p = 1");

    MultistepMethod method;
    method.name = std::move(name);
    method.m = m;
    method.a = std::move(a);
    method.b = std::move(b);
    method.mu = mu;
    method.p0 = p0;
    return method;
  }

  /// First characteristic polynomial rho(xi) = sum_j a_j xi^j.
  Polynomial rho() const { return Polynomial(a); }

  /// Second characteristic polynomial sigma(xi) = sum_{j <= m-mu} b_j xi^j.
  Polynomial sigma() const {
    return Polynomial(std::vector<double>(b.begin(), b.begin() + (m - mu + 1)));
  }
};

/// Largest order p <= p_max satisfied by the method; throws Inconsistent if
/// even p = 1 fails.
inline int verify_order(const MultistepMethod& method, int p_max = 12) {
  if (p_max < 1 || p_max > 12)
    throw Error(ErrorCode::InvalidArgument, "p_max must lie in [1, 12]");
  const int p = detail::algebraic_order(method.a, method.b, p_max);
  if (p < 1) throw Error(ErrorCode::Inconsistent, method.name + ": order conditions fail for p = 1");
  return p;
}

// ---------------------------------------------------------------------------
// Constructors from first principles.

/// Integrates phi' = psi from x_{r+m-tau} to x_{r+m} with the polynomial
/// interpolating psi at x_r..x_{r+m-mu}. Adams-Bashforth: tau=1, mu=1;
/// Adams-Moulton: tau=1, mu=0; Nystrom: tau=2, mu=1; Milne-Simpson: tau=2, mu=0.
inline MultistepMethod interpolatory_method(std::string name, int tau, int mu, int m) {
  if (m < 1 || tau < 1 || tau > m || mu < 0 || mu > m)
    throw Error(ErrorCode::InvalidArgument, "need 1 <= tau <= m and 0 <= mu <= m");
  const int nodes = m - mu + 1;
  Matrix moments(static_cast<std::size_t>(nodes), static_cast<std::size_t>(nodes));
  std::vector<double> rhs(static_cast<std::size_t>(nodes));
  for (int q = 0; q < nodes; ++q) {
    for (int j = 0; j < nodes; ++j)
      moments(static_cast<std::size_t>(q), static_cast<std::size_t>(j)) = detail::ipow(j, q);
    rhs[static_cast<std::size_t>(q)] =
        (detail::ipow(m, q + 1) - detail::ipow(m - tau, q + 1)) / (q + 1);
  }
  const auto weights = solve_dense(moments, rhs);
  std::vector<double> a(static_cast<std::size_t>(m + 1), 0.0), b(static_cast<std::size_t>(m + 1), 0.0);
  a[static_cast<std::size_t>(m)] = 1.0;
  a[static_cast<std::size_t>(m - tau)] = -1.0;
  std::copy(weights.begin(), weights.end(), b.begin());
  return MultistepMethod::create(std::move(name), std::move(a), std::move(b));
}

/// m-step backward differentiation formula, sum_{k=1}^m (1/k) nabla^k phi_n = h psi_n.
inline MultistepMethod bdf_method(int m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "BDF needs m >= 1");
  std::vector<double> a(static_cast<std::size_t>(m + 1), 0.0), b(static_cast<std::size_t>(m + 1), 0.0);
  for (int k = 1; k <= m; ++k) {
    double binom = 1.0;  // C(k, i)
    for (int i = 0; i <= k; ++i) {
      a[static_cast<std::size_t>(m - i)] += ((i % 2 == 0) ? 1.0 : -1.0) * binom / k;
      binom = binom * (k - i) / (i + 1);
    }
  }
  b[static_cast<std::size_t>(m)] = 1.0;
  return MultistepMethod::create("bdf" + std::to_string(m), std::move(a), std::move(b));
}

// ---------------------------------------------------------------------------
// Registry.

inline constexpr std::array<std::string_view, 12> kBuiltinMethodNames = {
    "ab1",  "ab2",  "ab3",  "am1",  "nystrom2", "milne_simpson2",
    "bdf1", "bdf2", "bdf3", "bdf4", "bdf5",     "bdf6"};

/// Coefficient-exact registry entry.
inline MultistepMethod builtin(std::string_view name) {
  using V = std::vector<double>;
  auto make = [&](V a, V b) { return MultistepMethod::create(std::string(name), std::move(a), std::move(b)); };

  if (name == "ab1") return make({-1, 1}, {1, 0});
  if (name == "ab2") return make({0, -1, 1}, {-1.0 / 2, 3.0 / 2, 0});
  if (name == "ab3") return make({0, 0, -1, 1}, {5.0 / 12, -16.0 / 12, 23.0 / 12, 0});
  if (name == "am1") return make({-1, 1}, {1.0 / 2, 1.0 / 2});
  if (name == "nystrom2") return make({-1, 0, 1}, {0, 2, 0});
  if (name == "milne_simpson2") return make({-1, 0, 1}, {1.0 / 3, 4.0 / 3, 1.0 / 3});
  if (name == "bdf1") return make({-1, 1}, {0, 1});
  if (name == "bdf2") return make({1.0 / 2, -2, 3.0 / 2}, {0, 0, 1});
  if (name == "bdf3") return make({-1.0 / 3, 3.0 / 2, -3, 11.0 / 6}, {0, 0, 0, 1});
  if (name == "bdf4")
    return make({3.0 / 12, -16.0 / 12, 36.0 / 12, -48.0 / 12, 25.0 / 12}, {0, 0, 0, 0, 1});
  if (name == "bdf5")
    return make({-1.0 / 5, 5.0 / 4, -10.0 / 3, 5, -5, 137.0 / 60}, {0, 0, 0, 0, 0, 1});
  if (name == "bdf6")
    return make({1.0 / 6, -6.0 / 5, 15.0 / 4, -20.0 / 3, 15.0 / 2, -6, 147.0 / 60},
                {0, 0, 0, 0, 0, 0, 1});
  throw Error(ErrorCode::UnknownMethod, std::string(name));
}

// ---------------------------------------------------------------------------
// Stability.

struct StabilityReport {
  bool nullstable = false;         ///< rho is a simple von Neumann polynomial
  bool sigma_von_neumann = false;  ///< sigma is a simple von Neumann polynomial
  bool sigma_schur = false;        ///< all roots of sigma in the open unit disk
  std::vector<Complex> rho_roots;
  std::vector<Complex> sigma_roots;
  /// Largest modulus among the roots of sigma; the coefficients of 1/beta
  /// (and of alpha/beta) decay like tau^n when tau < 1.
  double decay_rate_tau = 0.0;
};

namespace detail {

inline constexpr double kCircleBand = 1e-8;

inline bool simple_von_neumann(const Polynomial& p, std::span<const Complex> zs) {
  const Polynomial dp = p.derivative();
  for (const Complex& z : zs) {
    const double r = std::abs(z);
    if (r > 1.0 + kCircleBand) return false;
    if (r > 1.0 - kCircleBand && std::abs(dp(z)) <= kCircleBand) return false;
  }
  return true;
}

inline bool schur(std::span<const Complex> zs) {
  return std::all_of(zs.begin(), zs.end(),
                     [](const Complex& z) { return std::abs(z) <= 1.0 - kCircleBand; });
}

}  // namespace detail

inline StabilityReport classify_stability(const MultistepMethod& method) {
  StabilityReport rep;
  const Polynomial rho = method.rho();
  const Polynomial sigma = method.sigma();
  rep.rho_roots = roots(rho);
  if (sigma.degree() >= 1) rep.sigma_roots = roots(sigma);
  rep.nullstable = detail::simple_von_neumann(rho, rep.rho_roots);
  rep.sigma_von_neumann = detail::simple_von_neumann(sigma, rep.sigma_roots);
  rep.sigma_schur = detail::schur(rep.sigma_roots);
  for (const Complex& z : rep.sigma_roots) rep.decay_rate_tau = std::max(rep.decay_rate_tau, std::abs(z));
  return rep;
}

/// Methods the Volterra solver accepts: nullstable, Schur sigma, 1 <= p0 <= m.
inline bool is_admitted(const MultistepMethod& method, const StabilityReport& report) {
  return report.nullstable && report.sigma_schur && method.p0 >= 1 && method.p0 <= method.m;
}

inline bool is_admitted(const MultistepMethod& method) {
  return is_admitted(method, classify_stability(method));
}

// ---------------------------------------------------------------------------
// Reflected coefficients.

/// alpha_j = a_{m-j}.
inline Polynomial alpha_polynomial(const MultistepMethod& method) {
  return Polynomial(std::vector<double>(method.a.rbegin(), method.a.rend()));
}

/// beta_j = b_{m-mu-j}.
inline Polynomial beta_polynomial(const MultistepMethod& method) {
  const auto last = method.b.begin() + (method.m - method.mu + 1);
  return Polynomial(std::vector<double>(std::make_reverse_iterator(last), method.b.rend()));
}

struct ReflectedSequences {
  SeriesCoeffs alpha;      ///< alpha_j, zero-padded
  SeriesCoeffs beta;       ///< beta_j, zero-padded
  SeriesCoeffs alpha_inv;  ///< 1 / alpha(xi)
  SeriesCoeffs gamma;      ///< beta(xi) / alpha(xi)
  SeriesCoeffs beta_inv;   ///< 1 / beta(xi); empty unless requested
  SeriesCoeffs gamma_inv;  ///< alpha(xi) / beta(xi); empty unless requested
};

inline SeriesCoeffs padded(const Polynomial& p, std::size_t n) {
  SeriesCoeffs s{std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) s[i] = p.coeff(i);
  return s;
}

/// All six sequences of length n. The inverses of beta need sigma to be a
/// Schur polynomial and throw NotSchur otherwise; pass with_inverses = false
/// to get alpha, beta, alpha_inv and gamma for any method.
inline ReflectedSequences reflected(const MultistepMethod& method, std::size_t n,
                                    bool with_inverses = true) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "reflected() needs n >= 1");
  const Polynomial alpha = alpha_polynomial(method);
  const Polynomial beta = beta_polynomial(method);
  ReflectedSequences out;
  out.alpha = padded(alpha, n);
  out.beta = padded(beta, n);
  out.alpha_inv = series_inverse(alpha, n);
  out.gamma = series_divide(beta, alpha, n);
  if (with_inverses) {
    if (!classify_stability(method).sigma_schur)
      throw Error(ErrorCode::NotSchur, method.name + ": sigma is not a Schur polynomial");
    out.beta_inv = series_inverse(beta, n);
    out.gamma_inv = series_divide(alpha, beta, n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometric tails of gamma_inv.

struct TailBounds {
  double sum_abs = 0.0;       ///< sum_s |c_s|, geometric tail included
  double sum_weighted = 0.0;  ///< sum_s s |c_s|, geometric tail included
  double tau = 0.0;           ///< fitted decay ratio
  double tail_abs = 0.0;      ///< geometric estimate of the part beyond the data
  double tail_weighted = 0.0;
};

/// Sums of an exponentially decaying sequence. The decay ratio is fitted on
/// the running maximum of |c_s| between the middle and the last quarter of
/// the data and used to extend both sums geometrically.
inline TailBounds tail_bounds(std::span<const double> coeffs) {
  const std::size_t n = coeffs.size();
  if (n < 8) throw Error(ErrorCode::InvalidArgument, "tail_bounds needs at least 8 coefficients");

  TailBounds tb;
  for (std::size_t s = 0; s < n; ++s) {
    tb.sum_abs += std::abs(coeffs[s]);
    tb.sum_weighted += static_cast<double>(s) * std::abs(coeffs[s]);
  }

  std::vector<double> envelope(n);
  double run = 0.0;
  for (std::size_t s = n; s-- > 0;) {
    run = std::max(run, std::abs(coeffs[s]));
    envelope[s] = run;
  }
  const std::size_t i1 = n / 2;
  const std::size_t i2 = (3 * n) / 4;
  if (envelope[i2] == 0.0) return tb;  // finite sequence, sums exact
  if (envelope[i1] == 0.0) return tb;

  tb.tau = std::pow(envelope[i2] / envelope[i1], 1.0 / static_cast<double>(i2 - i1));
  if (!(tb.tau < 1.0 - 1e-6))
    throw Error(ErrorCode::TailNotConverged, "fitted decay ratio " + std::to_string(tb.tau));

  // |c_j| <= envelope[i2] tau^{j - i2} for j >= n.
  const double t = tb.tau;
  const double lead = envelope[i2] * std::pow(t, static_cast<double>(n - i2));
  tb.tail_abs = lead / (1.0 - t);
  tb.tail_weighted = lead * (static_cast<double>(n) / (1.0 - t) + t / ((1.0 - t) * (1.0 - t)));
  tb.sum_abs += tb.tail_abs;
  tb.sum_weighted += tb.tail_weighted;
  return tb;
}

/// tail_bounds of the method's gamma_inv, lengthening the sequence until the
/// geometric tail is below 1e-12 of both sums.
inline TailBounds tail_bounds(const MultistepMethod& method) {
  for (std::size_t n = 64; n <= (std::size_t{1} << 16); n *= 2) {
    const auto seq = reflected(method, n);
    const TailBounds tb = tail_bounds(seq.gamma_inv.values);
    if (tb.tail_abs <= 1e-12 * tb.sum_abs && tb.tail_weighted <= 1e-12 * std::max(tb.sum_weighted, 1e-300))
      return tb;
  }
  throw Error(ErrorCode::TailNotConverged, method.name + ": tail above 1e-12 at 65536 terms");
}

}  // namespace vmsm
