#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vmsm/harness.hpp"

namespace {

using nlohmann::json;

/// Reads --config files as nested JSON objects: top-level keys are option
/// names, nested objects are subcommands.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() > 0)
        j[name] = opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
      else if (default_also && !opt->get_default_str().empty())
        j[name] = opt->get_default_str();
    }
    for (const CLI::App* sub : app->get_subcommands({})) j[sub->get_name()] = json::parse(to_config(sub, default_also, false, ""));
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    return items(j, "", {});
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value " + v.dump());
  }

  static std::vector<CLI::ConfigItem> items(const json& j, const std::string& name, std::vector<std::string> prefix) {
    std::vector<CLI::ConfigItem> out;
    if (j.is_object()) {
      if (!name.empty()) prefix.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) {
        auto sub = items(it.value(), it.key(), prefix);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    if (name.empty()) throw CLI::ConversionError("config root must be a JSON object");
    CLI::ConfigItem item;
    item.name = name;
    item.parents = prefix;
    if (j.is_array())
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    else
      item.inputs.push_back(scalar(j));
    out.push_back(std::move(item));
    return out;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vmsm::Error(vmsm::ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

std::string complex_str(const vmsm::Complex& z) {
  std::ostringstream os;
  os.precision(12);
  os << z.real();
  if (z.imag() != 0.0) os << (z.imag() > 0 ? "+" : "-") << std::abs(z.imag()) << "i";
  return os.str();
}

json method_json(const vmsm::MultistepMethod& m) {
  const auto rep = vmsm::classify_stability(m);
  json j{{"name", m.name},
         {"m", m.m},
         {"mu", m.mu},
         {"p0", m.p0},
         {"a", m.a},
         {"b", m.b},
         {"nullstable", rep.nullstable},
         {"sigma_von_neumann", rep.sigma_von_neumann},
         {"sigma_schur", rep.sigma_schur},
         {"admitted", vmsm::is_admitted(m, rep)},
         {"decay_rate_tau", rep.decay_rate_tau}};
  for (const auto& z : rep.rho_roots) j["rho_roots"].push_back(complex_str(z));
  for (const auto& z : rep.sigma_roots) j["sigma_roots"].push_back(complex_str(z));
  return j;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

void print_method(const json& j) {
  std::cout << j["name"].get<std::string>() << ": m=" << j["m"] << " mu=" << j["mu"] << " p0=" << j["p0"]
            << " nullstable=" << yes_no(j["nullstable"]) << " sigma_von_neumann=" << yes_no(j["sigma_von_neumann"])
            << " sigma_schur=" << yes_no(j["sigma_schur"]) << " admitted=" << yes_no(j["admitted"]) << "\n";
}

json rows_json(const std::vector<vmsm::TableRow>& rows, vmsm::SweepMode mode) {
  json arr = json::array();
  for (const auto& r : rows) {
    if (mode == vmsm::SweepMode::Apriori)
      arr.push_back({{"N", r.N}, {"delta", r.delta}, {"rel_delta_pct", r.rel_delta_pct}, {"max_err", r.max_err},
                     {"ratio", r.ratio}});
    else
      arr.push_back({{"delta", r.delta},
                     {"rel_delta_pct", r.rel_delta_pct},
                     {"N_chosen", r.N},
                     {"h_over_sqrt_delta", r.h_over_sqrt_delta},
                     {"max_err", r.max_err},
                     {"err_over_sqrt_delta", r.ratio}});
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volterra first-kind solver built on linear multistep quadrature"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  bool as_json = false;
  app.add_flag("--json", as_json, "Emit JSON instead of text");

  // methods
  auto* methods = app.add_subcommand("methods", "Inspect the multistep method registry");
  methods->require_subcommand(1);
  methods->add_subcommand("list", "List registry methods with their stability classification");
  auto* analyze = methods->add_subcommand("analyze", "Stability and order report for one method");
  std::string analyze_name;
  analyze->add_option("name", analyze_name, "Method name")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve one registry problem from noisy samples");
  int problem_id = 1;
  std::string method_name;
  int grid_count = 64;
  double delta = 0.0;
  std::uint64_t seed = 1;
  std::string csv_path;
  bool recursive = false;
  solve_cmd->add_option("--problem", problem_id, "Registry problem 1..4")->capture_default_str();
  solve_cmd->add_option("--method", method_name, "Method name (defaults to the problem's reference method)");
  solve_cmd->add_option("--n", grid_count, "Grid count N")->capture_default_str();
  solve_cmd->add_option("--delta", delta, "Noise level")->capture_default_str();
  solve_cmd->add_option("--seed", seed, "Noise seed")->capture_default_str();
  solve_cmd->add_option("--csv", csv_path, "Write per-node CSV to this path ('-' for stdout)");
  solve_cmd->add_flag("--recursive", recursive, "Use the recursive march instead of the weight form");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "A-priori sweep over h = 1/2^nu with delta = h^(p0+1)");
  vmsm::ExperimentSpec sweep_spec;
  sweep_spec.method_name.clear();
  std::vector<std::uint64_t> sweep_seeds{1, 2, 3, 4, 5};
  std::string sweep_csv;
  sweep_cmd->add_option("--problem", sweep_spec.problem_id, "Registry problem 1..4")->capture_default_str();
  sweep_cmd->add_option("--method", sweep_spec.method_name, "Method name");
  sweep_cmd->add_option("--nu-min", sweep_spec.nu_min, "Smallest nu")->capture_default_str();
  sweep_cmd->add_option("--nu-max", sweep_spec.nu_max, "Largest nu")->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_seeds, "Seeds (median over seeds is reported)");
  sweep_cmd->add_option("--csv", sweep_csv, "Write table CSV to this path ('-' for stdout)");

  // balance
  auto* balance_cmd = app.add_subcommand("balance", "Balancing-principle step-size choice");
  vmsm::ExperimentSpec bal_spec;
  bal_spec.mode = vmsm::SweepMode::Balance;
  bal_spec.method_name.clear();
  std::vector<std::uint64_t> bal_seeds{1};
  std::vector<double> bal_deltas;
  std::optional<double> beta;
  std::string bal_csv;
  balance_cmd->add_option("--problem", bal_spec.problem_id, "Registry problem 1..4")->capture_default_str();
  balance_cmd->add_option("--method", bal_spec.method_name, "Method name");
  balance_cmd->add_option("--delta", bal_deltas, "Noise level(s)")->required();
  balance_cmd->add_option("--beta", beta, "Threshold factor (default 2.05 C2)");
  balance_cmd->add_option("--kappa", bal_spec.kappa, "Ladder ratio exponent")->capture_default_str()->check(
      CLI::PositiveNumber);
  balance_cmd->add_option("--seed", bal_seeds, "Seed(s); the row reports medians");
  balance_cmd->add_option("--csv", bal_csv, "Write table CSV to this path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (methods->parsed()) {
      if (analyze->parsed()) {
        const json j = method_json(vmsm::builtin(analyze_name));
        if (as_json) {
          std::cout << j.dump(2) << "\n";
        } else {
          print_method(j);
          std::cout << "  a = " << json(j["a"]).dump() << "\n  b = " << json(j["b"]).dump() << "\n";
          std::cout << "  rho roots: " << j.value("rho_roots", json::array()).dump() << "\n";
          std::cout << "  sigma roots: " << j.value("sigma_roots", json::array()).dump() << "\n";
          std::cout << "  decay rate tau: " << j["decay_rate_tau"] << "\n";
        }
      } else {
        json arr = json::array();
        for (auto name : vmsm::kBuiltinMethodNames) arr.push_back(method_json(vmsm::builtin(name)));
        if (as_json)
          std::cout << arr.dump(2) << "\n";
        else
          for (const auto& j : arr) print_method(j);
      }
      return 0;
    }

    if (solve_cmd->parsed()) {
      const vmsm::Problem prob = vmsm::problem(problem_id);
      const auto method = vmsm::builtin(method_name.empty() ? vmsm::default_method(problem_id) : method_name);
      if (!(delta >= 0.0)) throw vmsm::Error(vmsm::ErrorCode::InvalidArgument, "--delta must be >= 0");
      const auto samples = vmsm::make_noisy_samples(prob, grid_count, delta, seed);
      const auto res = recursive ? vmsm::solve_recursive(prob, samples, method) : vmsm::solve(prob, samples, method);
      if (!csv_path.empty()) write_text(csv_path, vmsm::solution_csv(res));
      if (csv_path != "-") {
        if (as_json) {
          json j{{"problem", problem_id}, {"method", res.method},        {"N", res.grid_count},
                 {"h", res.h},            {"delta", delta},              {"seed", seed},
                 {"first_index", res.first_index}, {"start_condition", res.start_condition},
                 {"min_diagonal", res.min_diagonal}, {"u", res.u}};
          if (res.max_error) j["max_err"] = *res.max_error;
          std::cout << j.dump(2) << "\n";
        } else {
          std::cout << "problem " << problem_id << " (" << prob.name << "), method " << res.method << ", N = " << res.grid_count
                    << ", h = " << res.h << ", delta = " << delta << "\n";
          if (res.max_error) std::cout << "max error " << *res.max_error << "\n";
          std::cout << "start system condition " << res.start_condition << ", min |k(x_n, x_{n-mu})| "
                    << res.min_diagonal << "\n";
        }
      }
      return 0;
    }

    vmsm::ExperimentSpec spec;
    std::string out_path;
    if (sweep_cmd->parsed()) {
      spec = sweep_spec;
      spec.seeds = sweep_seeds;
      out_path = sweep_csv;
    } else {
      spec = bal_spec;
      spec.seeds = bal_seeds;
      spec.delta_list = bal_deltas;
      spec.beta = beta;
      out_path = bal_csv;
    }
    if (spec.method_name.empty()) spec.method_name = vmsm::default_method(spec.problem_id);
    const auto rows = vmsm::run_sweep(spec);
    const std::string csv = vmsm::table_csv(rows, spec.mode);
    if (!out_path.empty()) write_text(out_path, csv);
    if (out_path != "-") {
      if (as_json)
        std::cout << rows_json(rows, spec.mode).dump(2) << "\n";
      else
        std::cout << csv;
    }
    return 0;
  } catch (const vmsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vmsm::is_domain_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
