#pragma once

// Test-problem registry, a-priori and balancing sweeps, and the CSV layout
// shared by the CLI and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vmsm/error.hpp"
#include "vmsm/multistep.hpp"
#include "vmsm/solver.hpp"
#include "vmsm/stepsize.hpp"

namespace vmsm {

/// Registry problems 1..4 on [0, 1].
inline Problem problem(int id) {
  Problem p;
  p.a = 0.0;
  p.b = 1.0;
  switch (id) {
    case 1:
      p.name = "cos-kernel, u = 1";
      p.kernel = [](double x, double y) { return std::cos(x - y); };
      p.rhs = [](double x) { return std::sin(x); };
      p.exact_solution = [](double) { return 1.0; };
      p.lipschitz_L = std::sin(1.0);
      p.kernel_sup = 1.0;
      p.smoothness_p = 2;
      return p;
    case 2:
      p.name = "cos-kernel, u = y";
      p.kernel = [](double x, double y) { return std::cos(x - y); };
      p.rhs = [](double x) { return 1.0 - std::cos(x); };
      p.exact_solution = [](double y) { return y; };
      p.lipschitz_L = std::sin(1.0);
      p.kernel_sup = 1.0;
      p.smoothness_p = 4;
      return p;
    case 3:
      p.name = "linear kernel, u = y exp(-y)";
      p.kernel = [](double x, double y) { return 1.0 + x - y; };
      p.rhs = [](double x) { return x - 1.0 + std::exp(-x); };
      p.exact_solution = [](double y) { return y * std::exp(-y); };
      p.lipschitz_L = 1.0;
      p.kernel_sup = 2.0;
      p.smoothness_p = 2;
      return p;
    case 4:
      p.name = "differentiation, hat function";
      p.kernel = [](double, double) { return 1.0; };
      p.rhs = [](double x) { return x <= 0.5 ? x * x : 2.0 * x - x * x - 0.5; };
      p.exact_solution = [](double y) { return y <= 0.5 ? 2.0 * y : 2.0 * (1.0 - y); };
      p.lipschitz_L = 0.0;
      p.kernel_sup = 1.0;
      p.smoothness_p = 1;
      return p;
    default:
      throw Error(ErrorCode::UnknownProblem, "problem id " + std::to_string(id) + " (expected 1..4)");
  }
}

/// Method used for each registry problem in the reference experiments.
inline std::string default_method(int problem_id) {
  switch (problem_id) {
    case 1: return "nystrom2";
    case 2: return "bdf4";
    case 3: return "ab2";
    case 4: return "ab2";
    default: throw Error(ErrorCode::UnknownProblem, "problem id " + std::to_string(problem_id));
  }
}

/// max |f(x_n)| over the output grid x_0..x_{N-mu}.
inline double rhs_grid_norm(const Problem& prob, int grid_count, int mu) {
  const double h = prob.length() / grid_count;
  double best = 0.0;
  for (int n = 0; n <= grid_count - mu; ++n) best = std::max(best, std::abs(prob.rhs(prob.a + n * h)));
  return best;
}

enum class SweepMode { Apriori, Balance };

struct ExperimentSpec {
  int problem_id = 1;
  std::string method_name = "nystrom2";
  int nu_min = 5;  ///< h = 1 / 2^nu
  int nu_max = 12;
  std::vector<double> delta_list;  ///< balance mode
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SweepMode mode = SweepMode::Apriori;
  std::string output_path;
  std::optional<double> beta;  ///< balance mode; 2.05 C2 when absent
  int kappa = 1;

  void validate() const {
    if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "at least one seed required");
    if (mode == SweepMode::Apriori && (nu_min < 3 || nu_max > 14 || nu_min > nu_max))
      throw Error(ErrorCode::InvalidArgument, "nu range must lie within [3, 14]");
    if (mode == SweepMode::Balance && delta_list.empty())
      throw Error(ErrorCode::InvalidArgument, "balance sweep needs a delta list");
  }
};

struct TableRow {
  int N = 0;  ///< grid count (the chosen one in balance mode)
  double delta = 0.0;
  double rel_delta_pct = 0.0;  ///< 100 delta / ||f||
  double max_err = 0.0;        ///< seed median
  double ratio = 0.0;  ///< max_err / delta^{p/(p+1)}, or max_err / delta^{1/2} in balance mode
  double h_over_sqrt_delta = 0.0;  ///< balance mode
};

/// Upper median.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

inline std::vector<TableRow> run_apriori_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const Problem prob = problem(spec.problem_id);
  const MultistepMethod method = builtin(spec.method_name);
  const double exponent = static_cast<double>(prob.smoothness_p) / (prob.smoothness_p + 1);

  std::vector<TableRow> rows;
  for (int nu = spec.nu_min; nu <= spec.nu_max; ++nu) {
    const int N = 1 << nu;
    const double h = prob.length() / N;
    const double delta = std::pow(h, method.p0 + 1);
    std::vector<double> errors;
    for (std::uint64_t seed : spec.seeds) {
      const auto samples = make_noisy_samples(prob, N, delta, seed);
      errors.push_back(*solve(prob, samples, method).max_error);
    }
    TableRow row;
    row.N = N;
    row.delta = delta;
    row.rel_delta_pct = 100.0 * delta / rhs_grid_norm(prob, N, method.mu);
    row.max_err = median(errors);
    row.ratio = row.max_err / std::pow(delta, exponent);
    rows.push_back(row);
  }
  return rows;
}

struct BalanceRun {
  StepLadder ladder;
  BalancingConstants constants;
  double beta = 0.0;
  BalanceOutcome outcome;
};

/// One balancing run with the ladder rules of the reference experiment.
inline BalanceRun run_balance_once(const Problem& prob, const MultistepMethod& method, double delta,
                                   std::optional<double> beta, int kappa, std::uint64_t seed) {
  BalanceRun run;
  // h_bar is N-independent; the constants are recomputed for the finest rung below.
  const BalancingConstants coarse = balancing_constants(prob, method, min_grid_count(method));
  run.ladder = build_ladder(delta, method.p0, coarse.h_bar, prob.length(), kappa);
  run.constants = balancing_constants(prob, method, run.ladder.n_list.front());
  run.beta = beta.value_or(2.05 * run.constants.C2);
  const auto samples = coherent_samples(prob, run.ladder, delta, seed);
  run.outcome = balance(prob, samples, method, run.ladder, run.beta);
  return run;
}

inline std::vector<TableRow> run_balance_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const Problem prob = problem(spec.problem_id);
  const MultistepMethod method = builtin(spec.method_name);

  std::vector<TableRow> rows;
  for (double delta : spec.delta_list) {
    std::vector<double> errors, grid_counts;
    for (std::uint64_t seed : spec.seeds) {
      const BalanceRun run = run_balance_once(prob, method, delta, spec.beta, spec.kappa, seed);
      errors.push_back(*run.outcome.chosen().max_error);
      grid_counts.push_back(run.outcome.chosen_grid_count);
    }
    TableRow row;
    row.delta = delta;
    row.N = static_cast<int>(median(grid_counts));
    row.rel_delta_pct = 100.0 * delta / rhs_grid_norm(prob, row.N, method.mu);
    row.h_over_sqrt_delta = (prob.length() / row.N) / std::sqrt(delta);
    row.max_err = median(errors);
    row.ratio = row.max_err / std::sqrt(delta);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<TableRow> run_sweep(const ExperimentSpec& spec) {
  return spec.mode == SweepMode::Apriori ? run_apriori_sweep(spec) : run_balance_sweep(spec);
}

// ---------------------------------------------------------------------------
// CSV

/// Scientific notation with three significant digits.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

/// Round-trip precision for per-node output.
inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string table_csv_header(SweepMode mode) {
  return mode == SweepMode::Apriori ? "N,delta,rel_delta_pct,max_err,ratio"
                                    : "delta,rel_delta_pct,N_chosen,h_over_sqrt_delta,max_err,err_over_sqrt_delta";
}

inline std::string table_csv(const std::vector<TableRow>& rows, SweepMode mode) {
  std::ostringstream os;
  os << table_csv_header(mode) << "\r\n";
  for (const TableRow& r : rows) {
    if (mode == SweepMode::Apriori)
      os << r.N << ',' << format_sci(r.delta) << ',' << format_sci(r.rel_delta_pct) << ','
         << format_sci(r.max_err) << ',' << format_sci(r.ratio) << "\r\n";
    else
      os << format_sci(r.delta) << ',' << format_sci(r.rel_delta_pct) << ',' << r.N << ','
         << format_sci(r.h_over_sqrt_delta) << ',' << format_sci(r.max_err) << ',' << format_sci(r.ratio)
         << "\r\n";
  }
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Parses what table_csv wrote; the mode is read off the header.
inline std::vector<TableRow> parse_table_csv(const std::string& text, SweepMode* mode_out = nullptr) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::InvalidArgument, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  SweepMode mode;
  if (line == table_csv_header(SweepMode::Apriori))
    mode = SweepMode::Apriori;
  else if (line == table_csv_header(SweepMode::Balance))
    mode = SweepMode::Balance;
  else
    throw Error(ErrorCode::InvalidArgument, "unrecognised CSV header: " + line);
  if (mode_out) *mode_out = mode;

  std::vector<TableRow> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_fields(line);
    if (f.size() != (mode == SweepMode::Apriori ? 5u : 6u))
      throw Error(ErrorCode::InvalidArgument, "wrong field count: " + line);
    TableRow r;
    if (mode == SweepMode::Apriori) {
      r.N = std::stoi(f[0]);
      r.delta = std::stod(f[1]);
      r.rel_delta_pct = std::stod(f[2]);
      r.max_err = std::stod(f[3]);
      r.ratio = std::stod(f[4]);
    } else {
      r.delta = std::stod(f[0]);
      r.rel_delta_pct = std::stod(f[1]);
      r.N = std::stoi(f[2]);
      r.h_over_sqrt_delta = std::stod(f[3]);
      r.max_err = std::stod(f[4]);
      r.ratio = std::stod(f[5]);
    }
    rows.push_back(r);
  }
  return rows;
}

/// Per-node solution: n, x_n, u_delta[, u_exact, abs_err].
inline std::string solution_csv(const SolveResult& res) {
  std::ostringstream os;
  const bool exact = !res.exact.empty();
  os << "n,x_n,u_delta" << (exact ? ",u_exact,abs_err" : "") << "\r\n";
  for (std::size_t i = 0; i < res.u.size(); ++i) {
    os << res.first_index + static_cast<int>(i) << ',' << format_full(res.x[i]) << ',' << format_full(res.u[i]);
    if (exact) os << ',' << format_full(res.exact[i]) << ',' << format_full(std::abs(res.u[i] - res.exact[i]));
    os << "\r\n";
  }
  return os.str();
}

}  // namespace vmsm
