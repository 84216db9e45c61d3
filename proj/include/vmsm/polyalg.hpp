#pragma once

// Small dense kernels: LU solves, polynomial roots and truncated power-series
// arithmetic. Everything here works on m <= ~10 sized data.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iterator>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vmsm/error.hpp"

namespace vmsm {

using Complex = std::complex<double>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix id(n, n);
    for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
    return id;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  /// Maximum absolute row sum.
  double norm_inf() const {
    double best = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
      best = std::max(best, s);
    }
    return best;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double norm_inf(std::span<const double> v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

namespace detail {

// In-place LU with partial pivoting; returns the row permutation.
inline std::vector<std::size_t> lu_factor(Matrix& lu) {
  const std::size_t n = lu.rows();
  const double scale = lu.norm_inf();
  const double pivot_floor = 1e-14 * scale;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (!(std::abs(lu(piv, k)) >= pivot_floor) || scale == 0.0)
      throw Error(ErrorCode::SingularMatrix,
                  "pivot " + std::to_string(std::abs(lu(piv, k))) + " in column " +
                      std::to_string(k));
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(perm[k], perm[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      lu(i, k) /= lu(k, k);
      const double f = lu(i, k);
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return perm;
}

inline std::vector<double> lu_solve(const Matrix& lu, const std::vector<std::size_t>& perm,
                                    std::span<const double> rhs) {
  const std::size_t n = lu.rows();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
    x[i] = s / lu(i, i);
  }
  return x;
}

inline void require_square(const Matrix& a) {
  if (a.rows() == 0 || a.rows() != a.cols())
    throw Error(ErrorCode::InvalidArgument, "matrix must be square and non-empty");
}

}  // namespace detail

/// Solves a x = rhs by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when a pivot falls below 1e-14 ||a||_inf.
inline std::vector<double> solve_dense(const Matrix& a, std::span<const double> rhs) {
  detail::require_square(a);
  if (rhs.size() != a.rows())
    throw Error(ErrorCode::LengthMismatch, "rhs length does not match matrix order");
  Matrix lu = a;
  const auto perm = detail::lu_factor(lu);
  return detail::lu_solve(lu, perm, rhs);
}

inline Matrix invert_dense(const Matrix& a) {
  detail::require_square(a);
  const std::size_t n = a.rows();
  Matrix lu = a;
  const auto perm = detail::lu_factor(lu);
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const auto col = detail::lu_solve(lu, perm, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

/// cond_inf(a) = ||a||_inf ||a^{-1}||_inf.
inline double condition_inf(const Matrix& a) { return a.norm_inf() * invert_dense(a).norm_inf(); }

/// Real polynomial with ascending coefficients; trailing zeros are trimmed so
/// the zero polynomial has no coefficients.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }
  Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { trim(); }

  const std::vector<double>& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }
  /// Degree; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double coeff(std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : 0.0; }

  template <typename T>
  T operator()(T x) const {
    T acc{};
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + T(coeffs_[i]);
    return acc;
  }

  Polynomial derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
  }

  double max_abs_coeff() const { return norm_inf(coeffs_); }

  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    if (p.is_zero() || q.is_zero()) return {};
    std::vector<double> r(p.coeffs_.size() + q.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < q.coeffs_.size(); ++j) r[i + j] += p.coeffs_[i] * q.coeffs_[j];
    return Polynomial(std::move(r));
  }

 private:
  void trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
  }

  std::vector<double> coeffs_;
};

/// Truncated power series c_0 + c_1 xi + ... + c_{n-1} xi^{n-1}.
struct SeriesCoeffs {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

/// First n coefficients of the Cauchy product of two sequences.
inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b,
                                    std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    const std::size_t lo = r >= b.size() ? r - b.size() + 1 : 0;
    for (std::size_t i = lo; i <= r && i < a.size(); ++i) s += a[i] * b[r - i];
    out[r] = s;
  }
  return out;
}

/// First n coefficients of num(xi) / den(xi), from
/// sum_{s<=r} den_{r-s} c_s = num_r.
inline SeriesCoeffs series_divide(const Polynomial& num, const Polynomial& den, std::size_t n) {
  const auto& d = den.coeffs();
  if (d.empty() || d[0] == 0.0)
    throw Error(ErrorCode::ZeroConstantTerm, "denominator has zero constant term");
  SeriesCoeffs c{std::vector<double>(n, 0.0)};
  const double d0 = d[0];
  for (std::size_t r = 0; r < n; ++r) {
    double s = num.coeff(r);
    const std::size_t jmax = std::min(r, d.size() - 1);
    for (std::size_t j = 1; j <= jmax; ++j) s -= d[j] * c[r - j];
    c[r] = s / d0;
  }
  return c;
}

/// First n coefficients of 1 / p(xi).
inline SeriesCoeffs series_inverse(const Polynomial& p, std::size_t n) {
  return series_divide(Polynomial{1.0}, p, n);
}

namespace detail {

inline bool roots_acceptable(const Polynomial& p, std::span<const Complex> zs) {
  const double cmax = p.max_abs_coeff();
  for (const Complex& z : zs) {
    double scale = 0.0;
    double zpow = 1.0;
    for (double c : p.coeffs()) {
      scale += std::abs(c) * zpow;
      zpow *= std::abs(z);
    }
    if (!(std::abs(p(z)) <= 1e-8 * std::max(cmax, scale))) return false;
  }
  return true;
}

// Aberth-Ehrlich simultaneous iteration on a polynomial with p(0) != 0.
inline bool aberth(const Polynomial& p, std::vector<Complex>& z, int max_iter) {
  const auto& c = p.coeffs();
  const std::size_t n = c.size() - 1;
  const Polynomial dp = p.derivative();

  // Initial circle: geometric mean of root moduli, angles randomly offset.
  const double radius = std::pow(std::abs(c[0] / c[n]), 1.0 / static_cast<double>(n));
  std::mt19937_64 rng(0x9E3779B97F4A7C15ull + n);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const double offset = 2.0 * std::numbers::pi * jitter(rng);
  z.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = offset + 2.0 * std::numbers::pi * static_cast<double>(k) / n;
    const double r = radius * (1.0 + 0.05 * (jitter(rng) - 0.5));
    z[k] = std::polar(r, angle);
  }

  for (int it = 0; it < max_iter; ++it) {
    double max_step = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Complex pv = p(z[k]);
      if (pv == Complex(0.0)) continue;
      const Complex ratio = pv / dp(z[k]);
      Complex repulsion(0.0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      const Complex step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step) / std::max(1.0, std::abs(z[k])));
    }
    if (max_step < 1e-15) return true;
  }
  return false;
}

inline std::vector<Complex> companion_roots(const Polynomial& p) {
  const auto& c = p.coeffs();
  const std::size_t n = c.size() - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (std::size_t i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, false);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "companion eigenvalue iteration failed");
  std::vector<Complex> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace detail

/// All complex roots of p (with multiplicity). Exact zero roots are split off
/// first; the rest come from Aberth-Ehrlich (200 iterations) with a
/// companion-matrix eigenvalue fallback.
inline std::vector<Complex> roots(const Polynomial& p) {
  if (p.degree() < 1) throw Error(ErrorCode::InvalidArgument, "roots() needs degree >= 1");

  const auto& c = p.coeffs();
  std::size_t zeros = 0;
  while (c[zeros] == 0.0) ++zeros;
  std::vector<Complex> out(zeros, Complex(0.0));
  const Polynomial q(std::vector<double>(c.begin() + static_cast<std::ptrdiff_t>(zeros), c.end()));
  if (q.degree() == 0) return out;
  if (q.degree() == 1) {
    out.emplace_back(-q.coeff(0) / q.coeff(1));
    return out;
  }

  std::vector<Complex> z;
  const bool converged = detail::aberth(q, z, 200);
  if (!converged || !detail::roots_acceptable(q, z)) {
    z = detail::companion_roots(q);
    if (!detail::roots_acceptable(q, z))
      throw Error(ErrorCode::NoConvergence, "root residuals above tolerance");
  }
  // Snap tiny imaginary parts of real roots.
  for (Complex& r : z)
    if (std::abs(r.imag()) <= 1e-12 * std::max(1.0, std::abs(r.real()))) r = Complex(r.real(), 0.0);
  out.insert(out.end(), z.begin(), z.end());
  return out;
}

}  // namespace vmsm
