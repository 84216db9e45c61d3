#pragma once

// Reducible quadrature generated by a multistep method: interpolatory starting
// weights, the running weights w_{ns} of phi_n = h sum_s w_{ns} psi_s, and the
// forward integrator that checks both representations against each other.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vmsm/error.hpp"
#include "vmsm/multistep.hpp"
#include "vmsm/polyalg.hpp"

namespace vmsm {

/// Starting weights w~_{rs}, r = 1..m (matrix row r-1), s = 0..m-1, in grid
/// units: sum_s w~_{rs} s^q = r^{q+1} / (q+1) for q = 0..m-1. Row r = m is
/// included; the solver's starting system needs it.
inline Matrix starting_weights(int m) {
  if (m < 1 || m > 8) throw Error(ErrorCode::InvalidArgument, "starting_weights needs 1 <= m <= 8");
  const auto n = static_cast<std::size_t>(m);
  Matrix moments(n, n);
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t s = 0; s < n; ++s) moments(q, s) = detail::ipow(static_cast<double>(s), static_cast<int>(q));

  Matrix w(n, n);
  std::vector<double> rhs(n);
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t q = 0; q < n; ++q)
      rhs[q] = detail::ipow(static_cast<double>(r), static_cast<int>(q + 1)) / static_cast<double>(q + 1);
    std::vector<double> row;
    try {
      row = solve_dense(moments, rhs);
      // Two refinement sweeps with the residual accumulated in extended precision.
      for (int sweep = 0; sweep < 2; ++sweep) {
        std::vector<double> residual(n);
        for (std::size_t q = 0; q < n; ++q) {
          long double acc = rhs[q];
          for (std::size_t s = 0; s < n; ++s)
            acc -= static_cast<long double>(moments(q, s)) * static_cast<long double>(row[s]);
          residual[q] = static_cast<double>(acc);
        }
        const auto correction = solve_dense(moments, residual);
        for (std::size_t s = 0; s < n; ++s) row[s] += correction[s];
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::SingularSystem, e.what());
    }
    for (std::size_t s = 0; s < n; ++s) w(r - 1, s) = row[s];
  }
  return w;
}

/// Methods with m = 1, mu = 0 and b_0 = 0 (backward rectangle) never touch
/// psi_0, so the starting procedure is skipped and no value at x_0 exists.
inline bool skips_start_block(const MultistepMethod& method) {
  return method.m == 1 && method.mu == 0 && method.b[0] == 0.0;
}

/// Weights w_{ns} of the (rho, sigma)-reducible quadrature for n <= N.
/// Storage is the gamma band plus m start columns, O(N m).
class WeightTable {
 public:
  /// No admissibility check; see running_weights() for the checked entry point.
  static WeightTable build(const MultistepMethod& method, int grid_count) {
    if (grid_count < method.m + method.mu)
      throw Error(ErrorCode::InvalidArgument, "grid count below m + mu");
    WeightTable t;
    t.method_ = method;
    t.n_ = grid_count;
    const int m = method.m;
    const int mu = method.mu;
    const auto len = static_cast<std::size_t>(grid_count + 1);

    const Polynomial alpha = alpha_polynomial(method);
    const Polynomial beta = beta_polynomial(method);
    t.gamma_ = series_divide(beta, alpha, len).values;
    t.start_ = starting_weights(m);

    // Start columns: w_{0s} = 0, w_{ts} = w~_{ts} for 1 <= t <= m-1, then
    // sum_{t} alpha_{n-t} w_{ts} = beta_{n-mu-s} for n >= m.
    t.columns_.assign(static_cast<std::size_t>(m), std::vector<double>(len, 0.0));
    const double alpha0 = alpha.coeff(0);
    for (int s = 0; s < m; ++s) {
      auto& col = t.columns_[static_cast<std::size_t>(s)];
      for (int r = 1; r < m; ++r)
        col[static_cast<std::size_t>(r)] = t.start_(static_cast<std::size_t>(r - 1), static_cast<std::size_t>(s));
      for (int n = m; n <= grid_count; ++n) {
        double acc = (n >= mu + s) ? beta.coeff(static_cast<std::size_t>(n - mu - s)) : 0.0;
        for (int i = 1; i <= std::min(m, n); ++i)
          acc -= alpha.coeff(static_cast<std::size_t>(i)) * col[static_cast<std::size_t>(n - i)];
        col[static_cast<std::size_t>(n)] = acc / alpha0;
      }
    }

    for (int n = m + mu; n <= grid_count; ++n) {
      double row_sum = 0.0;
      for (int s = 0; s < m; ++s) {
        const double w = std::abs(t.columns_[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)]);
        row_sum += w;
        t.sup_abs_ = std::max(t.sup_abs_, w);
      }
      t.start_sum_max_ = std::max(t.start_sum_max_, row_sum);
    }
    for (int k = 0; k <= grid_count - mu - m; ++k)
      t.sup_abs_ = std::max(t.sup_abs_, std::abs(t.gamma_[static_cast<std::size_t>(k)]));
    return t;
  }

  const MultistepMethod& method() const { return method_; }
  int grid_count() const { return n_; }

  /// w~_{rs} with row r-1.
  const Matrix& start_weights() const { return start_; }
  std::span<const double> gamma() const { return gamma_; }

  /// w_{ns} for m <= n <= N and 0 <= s <= n - mu (zero for s > n - mu).
  double weight(int n, int s) const {
    const int m = method_.m;
    if (s < m) return columns_[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)];
    const int k = n - method_.mu - s;
    return k >= 0 ? gamma_[static_cast<std::size_t>(k)] : 0.0;
  }

  /// Column s < m of the start block, indexed by n = 0..N.
  std::span<const double> start_column(int s) const { return columns_[static_cast<std::size_t>(s)]; }

  /// sup |w_{ns}| over m + mu <= n <= N, 0 <= s <= n - mu.
  double sup_abs() const { return sup_abs_; }

  /// max over m + mu <= n <= N of sum_{s < m} |w_{ns}|.
  double start_weight_sum_max() const { return start_sum_max_; }

 private:
  MultistepMethod method_;
  int n_ = 0;
  Matrix start_;
  std::vector<double> gamma_;
  std::vector<std::vector<double>> columns_;
  double sup_abs_ = 0.0;
  double start_sum_max_ = 0.0;
};

/// Checked weight table for the Volterra solver.
inline WeightTable running_weights(const MultistepMethod& method, int grid_count) {
  if (!is_admitted(method))
    throw Error(ErrorCode::MethodNotAdmitted,
                method.name + ": needs nullstable rho, Schur sigma and 1 <= p0 <= m");
  return WeightTable::build(method, grid_count);
}

/// phi_0..phi_n from the multistep recurrence with starting values
/// phi_r = h sum_s w~_{rs} psi_s, r = 1..m-1; psi holds psi_0..psi_{n-mu}.
inline std::vector<double> multistep_march(const MultistepMethod& method, std::span<const double> psi,
                                           double h) {
  const int m = method.m;
  const int mu = method.mu;
  const int n = static_cast<int>(psi.size()) - 1 + mu;
  if (n < m + mu) throw Error(ErrorCode::LengthMismatch, "need at least m + 1 psi values");

  std::vector<double> phi(static_cast<std::size_t>(n + 1), 0.0);
  if (m >= 2) {
    const Matrix start = starting_weights(m);
    for (int r = 1; r < m; ++r) {
      double s = 0.0;
      for (int j = 0; j < m; ++j)
        s += start(static_cast<std::size_t>(r - 1), static_cast<std::size_t>(j)) * psi[static_cast<std::size_t>(j)];
      phi[static_cast<std::size_t>(r)] = h * s;
    }
  }
  const double am = method.a[static_cast<std::size_t>(m)];
  for (int r = 0; r + m <= n; ++r) {
    double rhs = 0.0;
    for (int j = 0; j <= m - mu; ++j)
      rhs += method.b[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(r + j)];
    rhs *= h;
    for (int j = 0; j < m; ++j) rhs -= method.a[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(r + j)];
    phi[static_cast<std::size_t>(r + m)] = rhs / am;
  }
  return phi;
}

struct ForwardIntegral {
  double recursion = 0.0;    ///< phi_n from the recurrence
  double weight_form = 0.0;  ///< h sum_s w_{ns} psi_s
};

/// Approximates the integral of psi over [x_0, x_n] both ways, with
/// n = psi.size() - 1 + mu.
inline ForwardIntegral integrate_forward(const MultistepMethod& method, std::span<const double> psi,
                                         double h) {
  const int n = static_cast<int>(psi.size()) - 1 + method.mu;
  if (n < method.m + method.mu)
    throw Error(ErrorCode::LengthMismatch,
                "integrate_forward needs n >= m + mu, got n = " + std::to_string(n));
  ForwardIntegral out;
  out.recursion = multistep_march(method, psi, h).back();
  const WeightTable table = WeightTable::build(method, n);
  double acc = 0.0;
  for (int s = 0; s <= n - method.mu; ++s) acc += table.weight(n, s) * psi[static_cast<std::size_t>(s)];
  out.weight_form = h * acc;
  return out;
}

/// lambda(psi, y, h) = sum_j a_j phi(y + jh) - h sum_j b_j psi(y + jh) with phi' = psi.
template <typename Psi, typename Phi>
double local_truncation_error(const MultistepMethod& method, Psi&& psi, Phi&& antiderivative, double y,
                              double h) {
  double lhs = 0.0, rhs = 0.0;
  for (int j = 0; j <= method.m; ++j) {
    lhs += method.a[static_cast<std::size_t>(j)] * antiderivative(y + j * h);
    rhs += method.b[static_cast<std::size_t>(j)] * psi(y + j * h);
  }
  return lhs - h * rhs;
}

}  // namespace vmsm
