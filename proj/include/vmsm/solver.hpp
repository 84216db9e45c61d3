#pragma once

// First-kind Volterra equation  int_a^x k(x,y) u(y) dy = f(x)  from noisy
// samples f_n^delta, discretised with a multistep-generated quadrature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vmsm/error.hpp"
#include "vmsm/multistep.hpp"
#include "vmsm/polyalg.hpp"
#include "vmsm/quadrature.hpp"

namespace vmsm {

struct Problem {
  std::string name;
  double a = 0.0;
  double b = 1.0;
  /// k(x, y), callable on a <= y <= x <= b and on the corner [a, a + m h_max]^2.
  std::function<double(double, double)> kernel;
  std::function<double(double)> rhs;
  std::function<double(double)> exact_solution;  ///< may be empty
  double lipschitz_L = 0.0;  ///< Lipschitz constant of k in x
  double kernel_sup = 1.0;   ///< max |k| over the kernel domain
  int smoothness_p = 1;      ///< u in C^{p-1,1}

  double length() const { return b - a; }
  bool has_exact_solution() const { return static_cast<bool>(exact_solution); }
};

/// f_n^delta for n = 0..N; index 0 holds the exact f(a) and is never read by
/// the solver.
struct NoisySamples {
  std::vector<double> values;
  double delta = 0.0;
  std::uint64_t seed = 0;

  int grid_count() const { return static_cast<int>(values.size()) - 1; }
};

/// Uniform perturbations Delta f_1..Delta f_N in [-delta, delta]
/// (element 0 is 0). Deterministic in (N, seed).
inline std::vector<double> uniform_noise(int grid_count, double delta, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(grid_count)};
  std::mt19937_64 engine(seq);
  std::vector<double> noise(static_cast<std::size_t>(grid_count + 1), 0.0);
  for (int n = 1; n <= grid_count; ++n) {
    const double unit = static_cast<double>(engine() >> 11) * 0x1.0p-53;  // [0, 1)
    noise[static_cast<std::size_t>(n)] = delta * (2.0 * unit - 1.0);
  }
  return noise;
}

/// Samples of f on the N-grid plus the noise values noise[n * stride].
inline NoisySamples samples_with_noise(const Problem& problem, int grid_count, std::span<const double> noise,
                                       int stride, double delta, std::uint64_t seed) {
  const double h = problem.length() / grid_count;
  NoisySamples out;
  out.delta = delta;
  out.seed = seed;
  out.values.resize(static_cast<std::size_t>(grid_count + 1));
  out.values[0] = problem.rhs(problem.a);
  for (int n = 1; n <= grid_count; ++n)
    out.values[static_cast<std::size_t>(n)] =
        problem.rhs(problem.a + n * h) + noise[static_cast<std::size_t>(n) * static_cast<std::size_t>(stride)];
  return out;
}

inline NoisySamples make_noisy_samples(const Problem& problem, int grid_count, double delta,
                                       std::uint64_t seed) {
  if (grid_count < 1) throw Error(ErrorCode::InvalidArgument, "grid count must be positive");
  if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level must be >= 0");
  const auto noise = uniform_noise(grid_count, delta, seed);
  return samples_with_noise(problem, grid_count, noise, 1, delta, seed);
}

struct SolveResult {
  std::string method;
  int grid_count = 0;   ///< N
  double h = 0.0;
  int first_index = 0;  ///< 1 when no approximation at x_0 exists
  std::vector<double> x;  ///< x_first..x_{N-mu}
  std::vector<double> u;  ///< u_first^delta..u_{N-mu}^delta
  std::vector<double> exact;  ///< u(x_n) when the problem knows it
  std::optional<double> max_error;
  double start_condition = std::numeric_limits<double>::quiet_NaN();  ///< cond_inf(S_h)
  double min_diagonal = std::numeric_limits<double>::quiet_NaN();  ///< min |k(x_n, x_{n-mu})| used

  int last_index() const { return first_index + static_cast<int>(u.size()) - 1; }
  bool has(int n) const { return n >= first_index && n <= last_index(); }
  double at(int n) const { return u[static_cast<std::size_t>(n - first_index)]; }
};

struct StartingValues {
  std::vector<double> u;  ///< u_0..u_{m-1}; empty when the start block is skipped
  double condition = std::numeric_limits<double>::quiet_NaN();
};

/// Solves h S_h (u_0..u_{m-1}) = (f_1..f_m) with S_h(n, s) = w~_{ns} k(x_n, x_s).
inline StartingValues starting_values(const Problem& problem, const NoisySamples& samples,
                                      const MultistepMethod& method, double h) {
  StartingValues out;
  if (skips_start_block(method)) return out;
  const int m = method.m;
  if (samples.grid_count() < m) throw Error(ErrorCode::LengthMismatch, "fewer than m samples");
  const Matrix start = starting_weights(m);
  const auto msz = static_cast<std::size_t>(m);
  Matrix system(msz, msz);
  std::vector<double> rhs(msz);
  for (int n = 1; n <= m; ++n) {
    const double xn = problem.a + n * h;
    for (int s = 0; s < m; ++s)
      system(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(s)) =
          h * start(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(s)) *
          problem.kernel(xn, problem.a + s * h);
    rhs[static_cast<std::size_t>(n - 1)] = samples.values[static_cast<std::size_t>(n)];
  }
  try {
    out.u = solve_dense(system, rhs);
    // cond(h S_h) = cond(S_h)
    out.condition = condition_inf(system);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularMatrix) throw Error(ErrorCode::SingularStartSystem, e.what());
    throw;
  }
  return out;
}

namespace detail {

inline constexpr double kMinDiagonal = 0.5;

inline void check_solver_inputs(const Problem& problem, const NoisySamples& samples,
                                const MultistepMethod& method) {
  if (!problem.kernel || !problem.rhs) throw Error(ErrorCode::InvalidArgument, "problem lacks kernel or rhs");
  if (!is_admitted(method))
    throw Error(ErrorCode::MethodNotAdmitted,
                method.name + ": needs nullstable rho, Schur sigma and 1 <= p0 <= m");
  if (samples.grid_count() < method.m + method.mu)
    throw Error(ErrorCode::LengthMismatch, "need N >= m + mu samples");
  const int N = samples.grid_count();
  const double h = problem.length() / N;
  for (int n = 0; n <= N; ++n) {
    const double x = problem.a + n * h;
    if (std::abs(problem.kernel(x, x) - 1.0) > 1e-10)
      throw Error(ErrorCode::InvalidArgument, "kernel must satisfy k(x,x) = 1");
  }
}

inline SolveResult finish(const Problem& problem, const MultistepMethod& method, int N, double h,
                          std::vector<double>&& u_all, double condition, double min_diag) {
  SolveResult res;
  res.method = method.name;
  res.grid_count = N;
  res.h = h;
  res.first_index = skips_start_block(method) ? 1 : 0;
  res.start_condition = condition;
  res.min_diagonal = min_diag;
  const int last = N - method.mu;
  for (int n = res.first_index; n <= last; ++n) {
    res.x.push_back(problem.a + n * h);
    res.u.push_back(u_all[static_cast<std::size_t>(n)]);
  }
  if (problem.has_exact_solution()) {
    double worst = 0.0;
    for (std::size_t i = 0; i < res.x.size(); ++i) {
      const double ex = problem.exact_solution(res.x[i]);
      res.exact.push_back(ex);
      worst = std::max(worst, std::abs(res.u[i] - ex));
    }
    res.max_error = worst;
  }
  return res;
}

inline double checked_diagonal(const Problem& problem, double xn, double xt, double& min_diag) {
  const double d = problem.kernel(xn, xt);
  if (!(std::abs(d) >= kMinDiagonal))
    throw Error(ErrorCode::DiagonalKernelTooSmall,
                "|k(x_n, x_{n-mu})| = " + std::to_string(std::abs(d)) + " < 0.5");
  min_diag = std::min(min_diag, std::abs(d));
  return d;
}

}  // namespace detail

/// Marches the perturbed multistep recurrence: for each n the whole
/// phi-sequence on [a, x_n] is rebuilt and psi_{n-mu} is read off the last
/// step. O(N^2); kept as the reference path.
inline SolveResult solve_recursive(const Problem& problem, const NoisySamples& samples,
                                   const MultistepMethod& method) {
  detail::check_solver_inputs(problem, samples, method);
  const int N = samples.grid_count();
  const int m = method.m;
  const int mu = method.mu;
  const double h = problem.length() / N;

  const StartingValues start = starting_values(problem, samples, method, h);
  std::vector<double> u(static_cast<std::size_t>(N - mu + 1), 0.0);
  std::copy(start.u.begin(), start.u.end(), u.begin());

  const Matrix sw = starting_weights(m);
  const double b_lead = method.b[static_cast<std::size_t>(m - mu)];
  double min_diag = std::numeric_limits<double>::infinity();
  std::vector<double> psi(static_cast<std::size_t>(N + 1));
  std::vector<double> phi(static_cast<std::size_t>(N + 1));

  for (int n = m + mu; n <= N; ++n) {
    const double xn = problem.a + n * h;
    for (int s = 0; s < n - mu; ++s)
      psi[static_cast<std::size_t>(s)] = problem.kernel(xn, problem.a + s * h) * u[static_cast<std::size_t>(s)];

    phi[0] = 0.0;
    for (int r = 1; r < m; ++r) {
      double acc = 0.0;
      for (int s = 0; s < m; ++s)
        acc += sw(static_cast<std::size_t>(r - 1), static_cast<std::size_t>(s)) * psi[static_cast<std::size_t>(s)];
      phi[static_cast<std::size_t>(r)] = h * acc;
    }
    for (int r = 0; r + m < n; ++r) {
      double acc = 0.0;
      for (int j = 0; j <= m - mu; ++j)
        acc += method.b[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(r + j)];
      acc *= h;
      for (int j = 0; j < m; ++j) acc -= method.a[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(r + j)];
      phi[static_cast<std::size_t>(r + m)] = acc / method.a[static_cast<std::size_t>(m)];
    }
    phi[static_cast<std::size_t>(n)] = samples.values[static_cast<std::size_t>(n)];

    // Step r = n - m solved for its newest psi value.
    const int r = n - m;
    double acc = 0.0;
    for (int j = 0; j <= m; ++j) acc += method.a[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(r + j)];
    for (int j = 0; j < m - mu; ++j)
      acc -= h * method.b[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(r + j)];
    const double psi_new = acc / (h * b_lead);

    const int t = n - mu;
    const double diag = detail::checked_diagonal(problem, xn, problem.a + t * h, min_diag);
    u[static_cast<std::size_t>(t)] = psi_new / diag;
  }
  return detail::finish(problem, method, N, h, std::move(u), start.condition, min_diag);
}

/// Solves h sum_{s <= n-mu} w_{ns} k(x_n, x_s) u_s = f_n for u_{n-mu}, n = m+mu..N.
/// Same result as solve_recursive up to rounding, without rebuilding phi.
inline SolveResult solve_weightform(const Problem& problem, const NoisySamples& samples,
                                    const MultistepMethod& method) {
  detail::check_solver_inputs(problem, samples, method);
  const int N = samples.grid_count();
  const int m = method.m;
  const int mu = method.mu;
  const double h = problem.length() / N;

  const StartingValues start = starting_values(problem, samples, method, h);
  std::vector<double> u(static_cast<std::size_t>(N - mu + 1), 0.0);
  std::copy(start.u.begin(), start.u.end(), u.begin());

  const WeightTable table = WeightTable::build(method, N);
  const auto gamma = table.gamma();
  const double gamma0 = gamma[0];
  double min_diag = std::numeric_limits<double>::infinity();

  for (int n = m + mu; n <= N; ++n) {
    const double xn = problem.a + n * h;
    const int t = n - mu;
    double acc = 0.0;
    for (int s = 0; s < std::min(m, t); ++s)
      acc += table.start_column(s)[static_cast<std::size_t>(n)] * problem.kernel(xn, problem.a + s * h) *
             u[static_cast<std::size_t>(s)];
    for (int s = m; s < t; ++s)
      acc += gamma[static_cast<std::size_t>(t - s)] * problem.kernel(xn, problem.a + s * h) *
             u[static_cast<std::size_t>(s)];
    const double diag = detail::checked_diagonal(problem, xn, problem.a + t * h, min_diag);
    u[static_cast<std::size_t>(t)] = (samples.values[static_cast<std::size_t>(n)] / h - acc) / (gamma0 * diag);
  }
  return detail::finish(problem, method, N, h, std::move(u), start.condition, min_diag);
}

/// Default execution path.
inline SolveResult solve(const Problem& problem, const NoisySamples& samples, const MultistepMethod& method) {
  return solve_weightform(problem, samples, method);
}

}  // namespace vmsm
