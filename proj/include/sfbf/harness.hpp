// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfbf/fbf.hpp"
#include "sfbf/problems.hpp"
#include "sfbf/rates.hpp"

namespace sfbf {

/// Parsed experiment configuration shared by `run` and `pd-run`.
///
/// JSON keys: benchmark (generator spec, stored benchmark, or {"file": path}),
/// noise, eps, step, theta, replications, horizon, seed, x0 (number or array),
/// v0, record {every, dense_until, per_decade}, fit {window, a, alpha, beta},
/// r_bias {magnitude, p}, override_conditions, eps_prime, step_eps.
struct ExperimentConfig {
  nlohmann::json benchmark_spec;
  NoiseSpec noise;
  nlohmann::json eps = {{"eps0", 0.0}, {"theta", 2.0}};
  nlohmann::json step = nlohmann::json::object();
  double theta = 0.0;
  std::uint64_t replications = 1;
  std::uint64_t horizon = 1000;
  std::uint64_t seed = 0;
  nlohmann::json x0 = 1.0;
  nlohmann::json v0 = 1.0;
  RecordPolicy record;
  std::optional<nlohmann::json> fit;
  double r_bias_magnitude = 0.0;
  double r_bias_p = 1.0;
  bool override_conditions = false;
  bool disable_inertia = false;
  /// Primal-dual step lambda = (1 - eps_prime)/(mu + ||K||) unless step.lambda is given.
  double eps_prime = 0.05;
  std::optional<double> step_eps;
  std::optional<std::string> out;
};

/// base_dir resolves relative benchmark file paths.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json to_json(const ExperimentConfig& config);

Benchmark load_benchmark(const nlohmann::json& spec, const std::string& base_dir = ".");

/// Worker count from SFBF_WORKERS, else hardware concurrency (at least 1).
unsigned default_workers();

/// Runs task(i) for i in [0, count) on up to `workers` threads. The first
/// exception (lowest index) is rethrown after all tasks finish.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task);

struct AggregateRow {
  double n = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Mean, unbiased std (0 when only one value), min, max.
AggregateRow aggregate(double n, const std::vector<double>& values);

struct ReplicationOutcome {
  std::size_t index = 0;
  Trajectory trajectory;
  std::optional<std::string> divergence;
};

struct RunResult {
  std::vector<AggregateRow> rows;
  std::vector<ReplicationOutcome> replications;
  std::vector<std::string> warnings;
  std::optional<RateVerdict> verdict;
  Benchmark benchmark;
};

/// Replications of run_fbf on the configured benchmark. Replication r uses
/// RngStream(seed, seed ^ r). Throws ParameterError when the schedules fail
/// the convergence conditions and override_conditions is not set.
RunResult run_experiment(const ExperimentConfig& config, unsigned workers, bool keep_trajectories = false);

struct PdRow {
  std::uint64_t N = 0;
  double mean_gap = 0.0;
  double std = 0.0;
  double bound = 0.0;
  std::size_t count = 0;
};

struct PdRunResult {
  std::vector<PdRow> rows;
  GapCertificate certificate;  // replication-averaged, at the final N
  double final_gap = 0.0;
  double lambda = 0.0;
  double step_eps = 0.0;
  std::size_t excluded_pairs = 0;
  std::vector<std::string> warnings;
  std::optional<RateVerdict> verdict;
};

PdRunResult run_pd_experiment(const ExperimentConfig& config, unsigned workers);

void write_run_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_pd_csv(std::ostream& out, const std::vector<PdRow>& rows);
/// Writes to path, surfacing I/O failures with the path in the message.
void write_text_file(const std::string& path, const std::string& contents);

nlohmann::json run_summary(const ExperimentConfig& config, const RunResult& result);
nlohmann::json pd_summary(const ExperimentConfig& config, const PdRunResult& result);
nlohmann::json to_json(const RateVerdict& verdict);

/// Reads (n, value) pairs from a CSV whose header starts with n or N; the value
/// column is the second one. Malformed lines raise ParseError with the line number.
std::pair<std::vector<double>, std::vector<double>> read_rate_csv(std::istream& in);

}  // namespace sfbf
