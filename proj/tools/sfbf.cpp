// SPDX-License-Identifier: Apache-2.0
// sfbf: experiment harness for the stochastic inertial forward-backward-forward solver.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfbf/errors.hpp"
#include "sfbf/harness.hpp"
#include "sfbf/problems.hpp"
#include "sfbf/rates.hpp"
#include "sfbf/validate.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replications;
  std::optional<std::uint64_t> horizon;
  std::string out;
  std::string summary;
  bool override_conditions = false;
  std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--replications", f.replications, "number of replications")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", f.horizon, "number of iterations");
  cmd->add_option("--out", f.out, "CSV output path (default: stdout)");
  cmd->add_option("--summary", f.summary, "JSON summary path (default: <out>.json, or stderr)");
  cmd->add_flag("--override-conditions", f.override_conditions, "run even if the convergence conditions fail");
  cmd->add_option("--workers", f.workers, "worker threads (default: $SFBF_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sfbf::InvalidInput("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw sfbf::ParseError(path + ": " + e.what());
  }
}

sfbf::ExperimentConfig load_config(const CommonFlags& f) {
  const auto base = std::filesystem::path(f.config).parent_path().string();
  auto c = sfbf::experiment_config_from_json(read_json_file(f.config), base.empty() ? "." : base);
  if (f.seed) c.seed = *f.seed;
  if (f.replications) c.replications = *f.replications;
  if (f.horizon) c.horizon = *f.horizon;
  if (f.override_conditions) c.override_conditions = true;
  if (!f.out.empty()) c.out = f.out;
  return c;
}

void emit(const std::optional<std::string>& out, const std::string& summary_path, const std::string& csv,
          const json& summary) {
  if (out) {
    sfbf::write_text_file(*out, csv);
  } else {
    std::cout << csv;
  }
  const std::string text = summary.dump(2) + "\n";
  if (!summary_path.empty()) {
    sfbf::write_text_file(summary_path, text);
  } else if (out) {
    sfbf::write_text_file(*out + ".json", text);
  } else {
    std::cerr << text;
  }
}

int cmd_run(const CommonFlags& f) {
  const auto c = load_config(f);
  const unsigned workers = f.workers.value_or(sfbf::default_workers());
  const auto result = sfbf::run_experiment(c, workers);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream csv;
  sfbf::write_run_csv(csv, result.rows);
  emit(c.out, f.summary, csv.str(), sfbf::run_summary(c, result));
  return 0;
}

int cmd_pd_run(const CommonFlags& f) {
  const auto c = load_config(f);
  const unsigned workers = f.workers.value_or(sfbf::default_workers());
  const auto result = sfbf::run_pd_experiment(c, workers);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream csv;
  sfbf::write_pd_csv(csv, result.rows);
  emit(c.out, f.summary, csv.str(), sfbf::pd_summary(c, result));
  return 0;
}

struct RateFitFlags {
  std::string csv;
  std::vector<double> window;
  std::optional<double> a, alpha, beta, theory_slope;
};

int cmd_rate_fit(const RateFitFlags& f) {
  std::ifstream in(f.csv);
  if (!in) throw sfbf::InvalidInput("cannot open " + f.csv);
  const auto [ns, vs] = sfbf::read_rate_csv(in);
  std::optional<std::pair<double, double>> window;
  if (!f.window.empty()) window = std::make_pair(f.window.at(0), f.window.at(1));
  std::optional<sfbf::TheoryRate> theory;
  if (f.theory_slope) {
    theory = sfbf::TheoryRate{*f.theory_slope, false};
  } else if (f.alpha && f.beta) {
    theory = sfbf::theory_rate(f.a.value_or(1.0), *f.alpha, *f.beta);
  } else if (f.alpha || f.beta || f.a) {
    throw sfbf::ParameterError("rate-fit: theory needs --alpha and --beta (and --a when alpha = 1)");
  }
  // Rows with zero or negative values (e.g. n = 0 exactly at the solution) are outside any log fit.
  const auto verdict = sfbf::fit_rate(ns, vs, window, theory);
  std::cout << sfbf::to_json(verdict).dump(2) << "\n";
  return 0;
}

int cmd_validate(const std::string& suite, const std::string& out, std::uint64_t seed) {
  const auto report = sfbf::run_validation(suite, seed);
  const std::string text = report.to_json().dump(2) + "\n";
  if (!out.empty()) {
    sfbf::write_text_file(out, text);
  } else {
    std::cout << text;
  }
  if (auto f = report.first_failure()) {
    std::cerr << "FAILED " << f->suite << "/" << f->name << ": " << f->detail << "\n";
    return 1;
  }
  std::cerr << "validate " << suite << ": " << report.checks.size() << " checks passed in "
            << report.elapsed_seconds << " s\n";
  return 0;
}

int cmd_gen_benchmark(const std::string& config, const std::string& generator, const json& extra,
                      std::optional<std::uint64_t> seed, const std::string& out) {
  json spec = config.empty() ? json::object() : read_json_file(config);
  if (spec.contains("benchmark")) spec = spec.at("benchmark");
  if (!generator.empty()) spec["generator"] = generator;
  for (const auto& [k, v] : extra.items()) spec[k] = v;
  if (seed) spec["seed"] = *seed;
  const auto bench = sfbf::generate_benchmark(spec);
  const std::string text = sfbf::to_json(bench).dump() + "\n";
  if (!out.empty()) {
    sfbf::write_text_file(out, text);
    std::cerr << "wrote " << bench.name << " (residual " << bench.residual << ") to " << out << "\n";
  } else {
    std::cout << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic inertial forward-backward-forward experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags, pd_flags;
  auto* run = app.add_subcommand("run", "replicated solver runs; CSV of E||x_n - p||^2");
  add_common(run, run_flags);
  auto* pd = app.add_subcommand("pd-run", "replicated primal-dual runs; CSV of ergodic gap and certificate");
  add_common(pd, pd_flags);

  RateFitFlags fit_flags;
  auto* fit = app.add_subcommand("rate-fit", "log-log slope of a run CSV");
  fit->add_option("csv", fit_flags.csv, "CSV produced by run or pd-run")->required()->check(CLI::ExistingFile);
  fit->add_option("--window", fit_flags.window, "fit window: n_lo n_hi")->expected(2);
  fit->add_option("--a", fit_flags.a, "step parameter a");
  fit->add_option("--alpha", fit_flags.alpha, "step exponent alpha in (1/2, 1]");
  fit->add_option("--beta", fit_flags.beta, "beta = min(2 alpha, theta)");
  fit->add_option("--theory-slope", fit_flags.theory_slope, "explicit predicted slope");

  std::string suite = "all", validate_out;
  std::uint64_t validate_seed = 20240601;
  auto* validate = app.add_subcommand("validate", "property suites; exit 0 iff all checks pass");
  validate->add_option("suite", suite, "operators|oracles|fbf|lemma36|rates|saddle|problems|all");
  validate->add_option("--out", validate_out, "write the JSON report here instead of stdout");
  validate->add_option("--seed", validate_seed, "seed for sampled checks");

  std::string gen_config, gen_name, gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<long long> gen_d, gen_m, gen_dp, gen_dd;
  std::optional<double> gen_mu, gen_L, gen_tau;
  auto* gen = app.add_subcommand("gen-benchmark", "generate a benchmark with its reference solution");
  gen->add_option("--config", gen_config, "JSON generator spec or experiment config")->check(CLI::ExistingFile);
  gen->add_option("--generator", gen_name, "strongly_monotone_affine|monotone_skew|lasso|bilinear_saddle");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--d", gen_d, "dimension");
  gen->add_option("--m", gen_m, "lasso sample count");
  gen->add_option("--d-primal", gen_dp, "primal dimension");
  gen->add_option("--d-dual", gen_dd, "dual dimension");
  gen->add_option("--mu", gen_mu, "strong monotonicity modulus");
  gen->add_option("--L", gen_L, "Lipschitz constant");
  gen->add_option("--tau", gen_tau, "l1 weight");
  gen->add_option("--out", gen_out, "output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags);
    if (*pd) return cmd_pd_run(pd_flags);
    if (*fit) return cmd_rate_fit(fit_flags);
    if (*validate) return cmd_validate(suite, validate_out, validate_seed);
    if (*gen) {
      json extra = json::object();
      if (gen_d) extra["d"] = *gen_d;
      if (gen_m) extra["m"] = *gen_m;
      if (gen_dp) extra["d_primal"] = *gen_dp;
      if (gen_dd) extra["d_dual"] = *gen_dd;
      if (gen_mu) extra["mu"] = *gen_mu;
      if (gen_L) extra["L"] = *gen_L;
      if (gen_tau) extra["tau"] = *gen_tau;
      return cmd_gen_benchmark(gen_config, gen_name, extra, gen_seed, gen_out);
    }
  } catch (const sfbf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
