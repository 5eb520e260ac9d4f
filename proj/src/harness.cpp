// SPDX-License-Identifier: Apache-2.0
#include "sfbf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "sfbf/errors.hpp"

namespace sfbf {

namespace {

Point point_or_constant(const nlohmann::json& j, Index dim, std::string_view what) {
  if (j.is_number()) return Point::Constant(dim, j.get<double>());
  Point p = point_from_json(j);
  if (p.size() != dim) {
    throw InvalidInput(std::string(what) + " has dimension " + std::to_string(p.size()) + ", expected " +
                       std::to_string(dim));
  }
  return p;
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_index(double n) {
  if (n == std::floor(n) && std::abs(n) < 9e15) {
    return std::to_string(static_cast<long long>(n));
  }
  return fmt17(n);
}

std::optional<std::pair<double, double>> window_from(const nlohmann::json& fit) {
  if (!fit.contains("window")) return std::nullopt;
  const auto& w = fit.at("window");
  return std::make_pair(w.at(0).get<double>(), w.at(1).get<double>());
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  try {
    ExperimentConfig c;
    c.benchmark_spec = j.at("benchmark");
    if (c.benchmark_spec.contains("file")) {
      std::filesystem::path p = c.benchmark_spec.at("file").get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      c.benchmark_spec["file"] = p.string();
    }
    if (j.contains("noise")) c.noise = noise_spec_from_json(j.at("noise"));
    if (j.contains("eps")) c.eps = j.at("eps");
    if (j.contains("step")) c.step = j.at("step");
    c.theta = j.value("theta", 0.0);
    c.replications = j.value("replications", std::uint64_t{1});
    c.horizon = j.value("horizon", std::uint64_t{1000});
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("x0")) c.x0 = j.at("x0");
    if (j.contains("v0")) c.v0 = j.at("v0");
    if (j.contains("record")) {
      const auto& r = j.at("record");
      c.record.record_every = r.value("every", c.record.record_every);
      c.record.dense_until = r.value("dense_until", c.record.dense_until);
      c.record.per_decade = r.value("per_decade", c.record.per_decade);
    }
    if (j.contains("fit")) c.fit = j.at("fit").is_boolean() ? nlohmann::json::object() : j.at("fit");
    if (j.contains("fit") && j.at("fit").is_boolean() && !j.at("fit").get<bool>()) c.fit.reset();
    if (j.contains("r_bias")) {
      c.r_bias_magnitude = j.at("r_bias").value("magnitude", 0.0);
      c.r_bias_p = j.at("r_bias").value("p", 1.0);
    }
    c.override_conditions = j.value("override_conditions", false);
    c.disable_inertia = j.value("disable_inertia", false);
    c.eps_prime = j.value("eps_prime", 0.05);
    if (j.contains("step_eps")) c.step_eps = j.at("step_eps").get<double>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (c.replications < 1) throw ParameterError("replications must be >= 1");
    if (!(c.theta >= 0.0 && c.theta <= 1.0)) throw ParameterError("theta must be in [0, 1]");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"benchmark", c.benchmark_spec},
                      {"noise", to_json(c.noise)},
                      {"eps", c.eps},
                      {"step", c.step},
                      {"theta", c.theta},
                      {"replications", c.replications},
                      {"horizon", c.horizon},
                      {"seed", c.seed},
                      {"x0", c.x0},
                      {"v0", c.v0},
                      {"record",
                       {{"every", c.record.record_every},
                        {"dense_until", c.record.dense_until},
                        {"per_decade", c.record.per_decade}}},
                      {"override_conditions", c.override_conditions},
                      {"disable_inertia", c.disable_inertia},
                      {"eps_prime", c.eps_prime}};
  if (c.fit) j["fit"] = *c.fit;
  if (c.r_bias_magnitude > 0.0) j["r_bias"] = {{"magnitude", c.r_bias_magnitude}, {"p", c.r_bias_p}};
  if (c.step_eps) j["step_eps"] = *c.step_eps;
  return j;
}

Benchmark load_benchmark(const nlohmann::json& spec, const std::string& base_dir) {
  if (spec.contains("file")) {
    std::filesystem::path p = spec.at("file").get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw InvalidInput("cannot open benchmark file " + p.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
    return benchmark_from_json(j);
  }
  if (spec.contains("generator")) return generate_benchmark(spec);
  if (spec.contains("kind")) return benchmark_from_json(spec);
  throw ParseError("benchmark must give 'file', 'generator' or a stored benchmark");
}

unsigned default_workers() {
  if (const char* env = std::getenv("SFBF_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ParameterError(std::string("SFBF_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

AggregateRow aggregate(double n, const std::vector<double>& values) {
  AggregateRow row;
  row.n = n;
  row.count = values.size();
  if (values.empty()) {
    row.mean = row.std = row.min = row.max = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  double sum = 0.0;
  row.min = values.front();
  row.max = values.front();
  for (double v : values) {
    sum += v;
    row.min = std::min(row.min, v);
    row.max = std::max(row.max, v);
  }
  row.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return row;
}

namespace {

std::optional<TheoryRate> theory_for(const ExperimentConfig& c, const StepSchedule& steps,
                                     const EpsilonSchedule& eps) {
  if (!c.fit) return std::nullopt;
  const auto& fit = *c.fit;
  if (fit.contains("a") && fit.contains("alpha") && fit.contains("beta")) {
    return theory_rate(fit.at("a").get<double>(), fit.at("alpha").get<double>(), fit.at("beta").get<double>());
  }
  if (steps.kind() == StepSchedule::Kind::polynomial) {
    return theory_rate(steps.a(), steps.alpha(), effective_beta(steps.alpha(), eps.theta_exp()));
  }
  return std::nullopt;
}

// With the override flag a constant step is taken as given, so inadmissible
// steps can be run on purpose.
StepSchedule steps_for(const ExperimentConfig& c, double L) {
  const auto kind = c.step.value("kind", std::string("constant"));
  if (kind == "constant" && c.override_conditions) {
    return StepSchedule::constant_unchecked(c.step.value("lambda", 0.9 / L));
  }
  return step_schedule_from_json(c.step, L);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& c, unsigned workers, bool keep_trajectories) {
  RunResult result;
  result.benchmark = load_benchmark(c.benchmark_spec);
  const Benchmark& bench = result.benchmark;
  if (bench.is_saddle()) throw InvalidInput("run: benchmark '" + bench.name + "' is a saddle problem; use pd-run");

  StochasticOracle oracle = make_oracle(bench, c.noise);
  if (c.r_bias_magnitude > 0.0) oracle = oracle.with_r_bias(c.r_bias_magnitude, c.r_bias_p);
  FbfConfig cfg{bench.inclusion->A,
                oracle,
                steps_for(c, bench.inclusion->B.lipschitz()),
                epsilon_schedule_from_json(c.eps),
                c.theta,
                c.horizon,
                c.record,
                c.disable_inertia};
  cfg.record.keep_points = keep_trajectories;

  result.warnings = check_regime(cfg);
  if (!result.warnings.empty() && !c.override_conditions) {
    std::string msg = "schedules fail the convergence conditions (pass --override-conditions to run anyway):";
    for (const auto& w : result.warnings) msg += "\n  " + w;
    throw ParameterError(msg);
  }

  const Point x0 = point_or_constant(c.x0, bench.dimension(), "x0");
  std::vector<ReplicationOutcome> outcomes(c.replications);
  parallel_for(c.replications, workers, [&](std::size_t r) {
    ReplicationOutcome& out = outcomes[r];
    out.index = r;
    try {
      out.trajectory = run_fbf(cfg, x0, bench.reference, RngStream(c.seed, c.seed ^ r));
    } catch (const TrajectoryDiverged& e) {
      out.trajectory = e.partial();
      out.divergence = e.what();
    }
    out.trajectory.warnings.clear();
  });

  // Sequential reduction in replication order.
  const auto indices = cfg.record.indices(c.horizon);
  result.rows.reserve(indices.size());
  std::vector<double> values;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    values.clear();
    for (const auto& out : outcomes) {
      if (k < out.trajectory.points.size()) values.push_back(*out.trajectory.points[k].sq_dist);
    }
    result.rows.push_back(aggregate(static_cast<double>(indices[k]), values));
  }

  if (c.fit) {
    std::vector<double> ns, ms;
    for (const auto& row : result.rows) {
      if (row.count == c.replications && row.n > 0) {
        ns.push_back(row.n);
        ms.push_back(row.mean);
      }
    }
    result.verdict = fit_rate(ns, ms, window_from(*c.fit), theory_for(c, cfg.steps, cfg.eps));
  }
  if (keep_trajectories) result.replications = std::move(outcomes);
  else {
    for (auto& out : outcomes) {
      if (out.divergence) {
        ReplicationOutcome slim;
        slim.index = out.index;
        slim.divergence = out.divergence;
        result.replications.push_back(std::move(slim));
      }
    }
  }
  return result;
}

PdRunResult run_pd_experiment(const ExperimentConfig& c, unsigned workers) {
  const Benchmark bench = load_benchmark(c.benchmark_spec);
  if (!bench.is_saddle()) throw InvalidInput("pd-run: benchmark '" + bench.name + "' is not a saddle problem");
  const SaddleProblem problem = make_noisy_saddle(bench, c.noise);
  const EpsilonSchedule eps = epsilon_schedule_from_json(c.eps);

  PdRunResult result;
  if (c.step.contains("lambda")) {
    result.lambda = c.step.at("lambda").get<double>();
    result.step_eps = c.step_eps.value_or(0.1);
  } else {
    result.lambda = problem.reparametrized_step(c.eps_prime);
    const double slack = 1.0 / ((1.0 - c.eps_prime) * (1.0 - c.eps_prime)) - 1.0;
    result.step_eps = c.step_eps.value_or(std::min(0.1, 0.5 * slack));
  }
  PdStepOptions options{result.step_eps, c.override_conditions};
  if (!(result.lambda < problem.step_bound(result.step_eps))) {
    std::ostringstream msg;
    msg << "step " << result.lambda << " is not below 1/(sqrt(1+eps)(mu+||K||)) = "
        << problem.step_bound(result.step_eps);
    if (!c.override_conditions) throw ParameterError(msg.str() + " (pass --override-conditions to run anyway)");
    result.warnings.push_back(msg.str());
  }

  const Point x0 = point_or_constant(c.x0, problem.primal_dim(), "x0");
  const Point v0 = point_or_constant(c.v0, problem.dual_dim(), "v0");
  const auto indices = c.record.indices(c.horizon);

  struct Rep {
    std::vector<std::optional<double>> gaps;
    std::vector<double> bounds;
    GapCertificate final_cert;
  };
  std::vector<Rep> reps(c.replications);
  parallel_for(c.replications, workers, [&](std::size_t r) {
    Rep& rep = reps[r];
    PdState state = PdState::start(x0, v0, RngStream(c.seed, c.seed ^ r));
    std::size_t k = 0;
    while (k < indices.size()) {
      pd_step(state, problem, result.lambda, eps.at(state.n), c.theta, options);
      if (state.n - 1 == indices[k]) {
        const auto [y_hat, z_hat] = ergodic_averages(state);
        rep.gaps.push_back(gap_difference(problem, y_hat, z_hat, bench.reference, bench.reference_dual));
        const auto cert = gap_certificate(state, bench.reference, bench.reference_dual, result.step_eps);
        rep.bounds.push_back(cert.bound);
        rep.final_cert = cert;
        ++k;
      }
    }
  });

  std::vector<double> values;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    values.clear();
    double bound = 0.0;
    for (const auto& rep : reps) {
      bound += rep.bounds[k];
      if (rep.gaps[k] && std::isfinite(*rep.gaps[k])) {
        values.push_back(*rep.gaps[k]);
      } else {
        ++result.excluded_pairs;
      }
    }
    const auto agg = aggregate(static_cast<double>(indices[k]), values);
    result.rows.push_back({indices[k], agg.mean, agg.std, bound / static_cast<double>(reps.size()), agg.count});
  }
  if (result.excluded_pairs > 0) {
    result.warnings.push_back(std::to_string(result.excluded_pairs) + " infeasible or infinite gap values excluded");
  }

  result.certificate = reps.front().final_cert;
  double C = 0.0, bound = 0.0;
  for (const auto& rep : reps) {
    C += rep.final_cert.C;
    bound += rep.final_cert.bound;
  }
  result.certificate.C = C / static_cast<double>(reps.size());
  result.certificate.bound = bound / static_cast<double>(reps.size());
  result.final_gap = result.rows.back().mean_gap;

  if (c.fit) {
    std::vector<double> ns, gs;
    for (const auto& row : result.rows) {
      if (row.N > 0 && row.count == c.replications) {
        ns.push_back(static_cast<double>(row.N));
        gs.push_back(row.mean_gap);
      }
    }
    std::optional<TheoryRate> theory;
    if (c.fit->contains("theory_slope")) theory = TheoryRate{c.fit->at("theory_slope").get<double>(), false};
    result.verdict = fit_rate(ns, gs, window_from(*c.fit), theory);
  }
  return result;
}

void write_run_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "n,mean_sq_dist,std,min,max,count\n";
  for (const auto& r : rows) {
    out << fmt_index(r.n) << ',' << fmt17(r.mean) << ',' << fmt17(r.std) << ',' << fmt17(r.min) << ','
        << fmt17(r.max) << ',' << r.count << '\n';
  }
}

void write_pd_csv(std::ostream& out, const std::vector<PdRow>& rows) {
  out << "N,mean_gap,std,bound\n";
  for (const auto& r : rows) {
    out << r.N << ',' << fmt17(r.mean_gap) << ',' << fmt17(r.std) << ',' << fmt17(r.bound) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  out << contents;
  out.flush();
  if (!out) throw InvalidInput("write to " + path + " failed");
}

nlohmann::json to_json(const RateVerdict& v) {
  nlohmann::json j = {{"fitted_slope", v.fitted_slope},
                      {"intercept", v.intercept},
                      {"window", {v.window.first, v.window.second}},
                      {"residual", v.residual},
                      {"points", v.point_count}};
  if (v.theory_slope) {
    j["theory_slope"] = *v.theory_slope;
    j["log_correction"] = v.log_correction;
  } else {
    j["theory_slope"] = nullptr;
  }
  return j;
}

nlohmann::json run_summary(const ExperimentConfig& config, const RunResult& result) {
  nlohmann::json diverged = nlohmann::json::array();
  for (const auto& r : result.replications) {
    if (r.divergence) diverged.push_back({{"replication", r.index}, {"message", *r.divergence}});
  }
  nlohmann::json j = {{"config", to_json(config)},
                      {"benchmark", {{"name", result.benchmark.name}, {"dimension", result.benchmark.dimension()},
                                     {"provenance", result.benchmark.provenance}}},
                      {"rows", result.rows.size()},
                      {"final_mean_sq_dist", result.rows.empty() ? 0.0 : result.rows.back().mean},
                      {"warnings", result.warnings},
                      {"diverged", diverged}};
  if (result.verdict) j["fit"] = to_json(*result.verdict);
  return j;
}

nlohmann::json pd_summary(const ExperimentConfig& config, const PdRunResult& result) {
  const auto& c = result.certificate;
  nlohmann::json j = {{"config", to_json(config)},
                      {"lambda", result.lambda},
                      {"step_eps", result.step_eps},
                      {"certificate",
                       {{"N", c.N}, {"bound", c.bound}, {"empirical_gap", result.final_gap}, {"S", c.S}, {"T", c.T},
                        {"C", c.C}, {"sum_lambda", c.sum_lambda}}},
                      {"excluded_pairs", result.excluded_pairs},
                      {"warnings", result.warnings}};
  if (result.verdict) j["fit"] = to_json(*result.verdict);
  return j;
}

std::pair<std::vector<double>, std::vector<double>> read_rate_csv(std::istream& in) {
  std::vector<double> ns, vs;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line.rfind("n,", 0) != 0 && line.rfind("N,", 0) != 0) {
        throw ParseError("line " + std::to_string(line_no) + ": expected a header starting with n or N");
      }
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at least two columns");
    }
    try {
      std::size_t pa = 0, pb = 0;
      const double n = std::stod(a, &pa);
      const double v = std::stod(b, &pb);
      if (pa != a.size() || pb != b.size()) throw std::invalid_argument("trailing characters");
      ns.push_back(n);
      vs.push_back(v);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed number in '" + line + "'");
    }
  }
  if (!header) throw ParseError("line 1: empty CSV");
  return {ns, vs};
}

}  // namespace sfbf
