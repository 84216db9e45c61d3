#pragma once

// Step-size choice: a-priori h ~ delta^{1/(p+1)}, the computable constant C2
// of the noise-propagation term C2 delta / h, and the early-stopping
// balancing principle over a nested ladder of step sizes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vmsm/error.hpp"
#include "vmsm/multistep.hpp"
#include "vmsm/polyalg.hpp"
#include "vmsm/quadrature.hpp"
#include "vmsm/solver.hpp"

namespace vmsm {

/// Smallest admissible grid count for a method: N_min = m + mu.
inline int min_grid_count(const MultistepMethod& method) { return method.m + method.mu; }

struct AprioriStep {
  double h = 0.0;
  int grid_count = 0;
};

/// N = smallest power of two >= length / delta^{1/(p+1)}, clamped below by N_min.
inline AprioriStep apriori_h(double delta, int p, double interval_length, int n_min) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "apriori_h needs delta > 0");
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "apriori_h needs p >= 1");
  const double target = interval_length / std::pow(delta, 1.0 / (p + 1));
  long long n = 1;
  while (static_cast<double>(n) < target * (1.0 - 1e-9)) n *= 2;
  n = std::max<long long>(n, n_min);
  AprioriStep out;
  out.grid_count = static_cast<int>(n);
  out.h = interval_length / static_cast<double>(n);
  return out;
}

struct BalancingConstants {
  double C2a = 0.0;
  double C2b = 0.0;
  double C3 = 0.0;
  double C2 = 0.0;
  double T_inv_norm = 0.0;          ///< ||T^{-1}||_inf
  double cond_T = 0.0;              ///< cond_inf(T)
  double gamma_inv_sum = 0.0;       ///< sum_s |gamma_inv_s|
  double gamma_sup = 0.0;           ///< sup_r |gamma_r|
  double gamma_inv_weighted = 0.0;  ///< sum_s s |gamma_inv_s|
  double start_weight_sum_max = 0.0;
  double h_max = 0.0;
  double h_bar = 0.0;  ///< step-size ceiling for the estimate
  // Inputs of the composition, kept so compose_C2 can be rerun.
  double lipschitz_L = 0.0;
  double kernel_sup = 0.0;
};

/// C2 = max{C2a, C2b (1 + C2a ||k|| max_n sum_{s<m} |w_{ns}|)}.
inline double compose_C2(double C2a, double C2b, double kernel_sup, double start_weight_sum_max) {
  return std::max(C2a, C2b * (1.0 + C2a * kernel_sup * start_weight_sum_max));
}

inline BalancingConstants balancing_constants(const Problem& problem, const MultistepMethod& method,
                                              int n_ref) {
  const StabilityReport report = classify_stability(method);
  if (!report.sigma_schur) throw Error(ErrorCode::NotSchur, method.name + ": sigma is not a Schur polynomial");
  if (!is_admitted(method, report))
    throw Error(ErrorCode::MethodNotAdmitted, method.name + ": not admitted by the solver");

  const double L = problem.lipschitz_L;
  const double mu_l = 1.0 + method.mu * L;
  BalancingConstants c;
  c.lipschitz_L = L;
  c.kernel_sup = problem.kernel_sup;

  const Matrix T = starting_weights(method.m);
  const Matrix T_inv = invert_dense(T);
  c.T_inv_norm = T_inv.norm_inf();
  c.cond_T = T.norm_inf() * c.T_inv_norm;

  const TailBounds tail = tail_bounds(method);
  c.gamma_inv_sum = tail.sum_abs;
  c.gamma_inv_weighted = tail.sum_weighted;

  const auto seq = reflected(method, std::size_t{1} << 14, false);
  c.gamma_sup = norm_inf(seq.gamma.values);

  const int n_table = std::max(n_ref, min_grid_count(method));
  c.start_weight_sum_max = WeightTable::build(method, n_table).start_weight_sum_max();

  c.C2a = (1.0 + L) * c.T_inv_norm;
  c.C3 = c.gamma_sup * c.gamma_inv_weighted;
  c.C2b = mu_l * c.gamma_inv_sum * std::exp(mu_l * c.C3 * L * problem.length());
  c.C2 = compose_C2(c.C2a, c.C2b, problem.kernel_sup, c.start_weight_sum_max);

  c.h_max = problem.length() / min_grid_count(method);
  c.h_bar = (L == 0.0) ? c.h_max : std::min(1.0 / (method.m * (1.0 + L) * c.cond_T), c.h_max);
  return c;
}

/// Nested step sizes h_s = length / N_s, N_s = N_low 2^{kappa (s_top - s)},
/// stored finest first.
struct StepLadder {
  std::vector<double> h_list;  ///< ascending
  std::vector<int> n_list;     ///< descending, N_s for each h_s
  int kappa = 1;
  bool finest_below_sqrt_delta = false;    ///< h_0 <= delta^{1/2}
  bool coarsest_above_rate_step = false;   ///< h_top >= delta^{1/(p0+1)}
  bool coarsest_below_h_bar = false;       ///< h_top <= h_bar

  std::size_t size() const { return h_list.size(); }
};

/// h_0 is the largest ladder step <= delta^{1/2}; h_top the smallest one
/// >= delta^{1/(p0+1)}, pulled down to h_bar when it would exceed it.
inline StepLadder build_ladder(double delta, int p0, double h_bar, double interval_length, int kappa) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "build_ladder needs delta > 0");
  if (kappa < 1 || p0 < 1) throw Error(ErrorCode::InvalidArgument, "build_ladder needs kappa >= 1, p0 >= 1");
  const double sqrt_delta = std::sqrt(delta);
  if (sqrt_delta >= h_bar) throw Error(ErrorCode::EmptyLadder, "delta^{1/2} >= h_bar, noise too large");

  const double rate_step = std::pow(delta, 1.0 / (p0 + 1));
  constexpr double slack = 1e-12;
  long long n_low = static_cast<long long>(std::floor(interval_length / rate_step * (1.0 + slack)));
  n_low = std::max<long long>(n_low, 1);
  const auto n_cap = static_cast<long long>(std::ceil(interval_length / h_bar * (1.0 - slack)));
  n_low = std::max(n_low, n_cap);

  const long long factor = 1LL << kappa;
  int s_top = 0;
  long long n_fine = n_low;
  while (interval_length / static_cast<double>(n_fine) > sqrt_delta * (1.0 + slack)) {
    n_fine *= factor;
    ++s_top;
    if (n_fine > (1LL << 40)) throw Error(ErrorCode::InvalidArgument, "ladder too long");
  }

  StepLadder ladder;
  ladder.kappa = kappa;
  for (int s = 0; s <= s_top; ++s) {
    const long long n = n_low << (kappa * (s_top - s));
    ladder.n_list.push_back(static_cast<int>(n));
    ladder.h_list.push_back(interval_length / static_cast<double>(n));
  }
  ladder.finest_below_sqrt_delta = ladder.h_list.front() <= sqrt_delta * (1.0 + slack);
  ladder.coarsest_above_rate_step = ladder.h_list.back() >= rate_step * (1.0 - slack);
  ladder.coarsest_below_h_bar = ladder.h_list.back() <= h_bar * (1.0 + slack);
  return ladder;
}

/// Samples for every rung from one noise realisation on the finest grid;
/// coarser rungs reuse the values at shared nodes.
inline std::vector<NoisySamples> coherent_samples(const Problem& problem, const StepLadder& ladder, double delta,
                                                  std::uint64_t seed) {
  const int n_fine = ladder.n_list.front();
  const auto noise = uniform_noise(n_fine, delta, seed);
  std::vector<NoisySamples> out;
  out.reserve(ladder.size());
  for (int n : ladder.n_list) out.push_back(samples_with_noise(problem, n, noise, n_fine / n, delta, seed));
  return out;
}

/// max over the nodes of the coarse grid of |u_coarse - u_fine|.
inline double rung_discrepancy(const SolveResult& coarse, const SolveResult& fine) {
  const int ratio = fine.grid_count / coarse.grid_count;
  double worst = 0.0;
  for (int n = coarse.first_index; n <= coarse.last_index(); ++n) {
    const int nf = n * ratio;
    if (!fine.has(nf)) continue;
    worst = std::max(worst, std::abs(coarse.at(n) - fine.at(nf)));
  }
  return worst;
}

struct RungComparison {
  std::size_t coarse_index = 0;
  std::size_t fine_index = 0;
  double h_coarse = 0.0;
  double h_fine = 0.0;
  double discrepancy = 0.0;
  double threshold = 0.0;  ///< beta delta / h_fine
  bool accepted = false;
};

struct BalanceOutcome {
  double chosen_h = 0.0;
  std::size_t chosen_index = 0;
  int chosen_grid_count = 0;
  std::vector<RungComparison> comparisons;
  std::vector<SolveResult> solutions;  ///< rungs 0..(last solved)

  const SolveResult& chosen() const { return solutions[chosen_index]; }
};

/// Early-stopping balancing principle: rung s is accepted when its solution
/// stays within beta delta / h_t of every finer rung t < s on its own grid;
/// the first rejection returns h_{s-1} and coarser rungs are never solved.
/// beta should exceed 2 C2.
inline BalanceOutcome balance(const Problem& problem, std::span<const NoisySamples> samples_per_rung,
                              const MultistepMethod& method, const StepLadder& ladder, double beta) {
  if (ladder.size() == 0) throw Error(ErrorCode::EmptyLadder, "ladder has no rungs");
  if (samples_per_rung.size() != ladder.size())
    throw Error(ErrorCode::LengthMismatch, "need one sample set per rung");
  const double delta = samples_per_rung[0].delta;
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "balance needs delta > 0");
  for (std::size_t s = 0; s < ladder.size(); ++s)
    if (samples_per_rung[s].grid_count() != ladder.n_list[s])
      throw Error(ErrorCode::LengthMismatch, "samples do not match ladder grid");

  BalanceOutcome out;
  out.solutions.push_back(solve(problem, samples_per_rung[0], method));
  for (std::size_t s = 1; s < ladder.size(); ++s) {
    out.solutions.push_back(solve(problem, samples_per_rung[s], method));
    bool ok = true;
    for (std::size_t t = 0; t < s; ++t) {
      RungComparison cmp;
      cmp.coarse_index = s;
      cmp.fine_index = t;
      cmp.h_coarse = ladder.h_list[s];
      cmp.h_fine = ladder.h_list[t];
      cmp.discrepancy = rung_discrepancy(out.solutions[s], out.solutions[t]);
      cmp.threshold = beta * delta / ladder.h_list[t];
      cmp.accepted = cmp.discrepancy <= cmp.threshold;
      ok = ok && cmp.accepted;
      out.comparisons.push_back(cmp);
    }
    if (!ok) break;
    out.chosen_index = s;
  }
  out.chosen_h = ladder.h_list[out.chosen_index];
  out.chosen_grid_count = ladder.n_list[out.chosen_index];
  return out;
}

}  // namespace vmsm
