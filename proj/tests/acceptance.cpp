// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sfbf/fbf.hpp"
#include "sfbf/harness.hpp"
#include "sfbf/problems.hpp"
#include "sfbf/rates.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;
using namespace sfbf;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// 1. O(1/n) rate on the strongly monotone affine benchmark.
Outcome rate_one_over_n() {
  const auto t0 = Clock::now();
  const auto c = experiment_config_from_json(json{
      {"benchmark", {{"generator", "strongly_monotone_affine"}, {"d", 20}, {"mu", 1.0}, {"L", 4.0}, {"seed", 7}}},
      {"noise", {{"model", "gaussian_constant"}, {"sigma0", 1.0}}},
      {"eps", {{"eps0", 0.1}, {"theta", 2.0}}},
      {"step", {{"kind", "polynomial"}, {"a", 2.0}, {"alpha", 1.0}, {"mu", 1.0}}},
      {"theta", 1.0},
      {"replications", 100},
      {"horizon", 100000},
      {"seed", 1},
      {"fit", {{"window", {1e3, 1e5}}, {"a", 2.0}, {"alpha", 1.0}, {"beta", 2.0}}}});
  const auto res = run_experiment(c, default_workers());
  const double slope = res.verdict->fitted_slope;
  const double t = seconds_since(t0);
  const bool skew = res.benchmark.inclusion->B.affine_form()->M.isApprox(
                        res.benchmark.inclusion->B.affine_form()->M.transpose()) == false;
  const bool ok = slope >= -1.15 && slope <= -0.85 && t <= 300 && skew && res.replications.empty();
  return {ok, "slope " + fmt(slope) + " in [-1.15, -0.85], " + fmt(t) + " s <= 300 s"};
}

// 2. Summable noise converges in every replication; non-summable noise does not.
Outcome regime_one_proxy() {
  const json base = {{"benchmark", {{"generator", "monotone_skew"}, {"d", 10}, {"L", 1.0}, {"seed", 11}}},
                     {"noise", {{"model", "gaussian_decay"}, {"sigma0", 0.5}, {"p", 1.0}}},
                     {"eps", {{"eps0", 0.1}, {"theta", 2.0}}},
                     {"step", {{"kind", "constant"}}},
                     {"theta", 0.5},
                     {"replications", 20},
                     {"horizon", 100000},
                     {"seed", 3}};
  const double threshold = 1e-4;
  const auto summable = run_experiment(experiment_config_from_json(base), default_workers());
  const auto& last = summable.rows.back();
  const double worst = std::sqrt(last.max);

  json control = base;
  control["noise"]["p"] = 0.0;
  control["override_conditions"] = true;
  const auto fails = run_experiment(experiment_config_from_json(control), default_workers());
  const double best_control = std::sqrt(fails.rows.back().min);
  const double worst_control = std::sqrt(fails.rows.back().max);

  const bool ok = last.count == 20 && last.n == 1e5 && worst <= threshold && worst_control > threshold;
  return {ok, "p=1: worst dist " + fmt(worst) + " <= 1e-4 over 20 runs; p=0: dist range [" + fmt(best_control) +
                  ", " + fmt(worst_control) + "], at least one > 1e-4"};
}

// B +- sigma (1,...,1)/sqrt(d), equally likely.
StochasticOracle two_atom(const LipOperator& B, double sigma) {
  const Index d = B.dim();
  const Point shift = Point::Constant(d, sigma / std::sqrt(static_cast<double>(d)));
  std::vector<LipOperator> atoms;
  for (double sign : {1.0, -1.0}) {
    atoms.emplace_back(d, [B, shift, sign](const Point& x) { return Point(B(x) + sign * shift); }, B.lipschitz(),
                       B.strong_mod());
  }
  return StochasticOracle::finite_sum(B, std::move(atoms));
}

// 3. One-step inequality residual on three benchmarks, two noise modes.
Outcome one_step_inequality() {
  double worst = std::numeric_limits<double>::infinity();
  int runs = 0;
  for (const auto& bench : {make_strongly_monotone_affine(10, 1.0, 4.0, 1), make_monotone_skew(6, 1.0, 2),
                            make_lasso(20, 5, 0.1, 3)}) {
    const auto& inc = *bench.inclusion;
    for (const auto& oracle : {StochasticOracle::exact(inc.B), two_atom(inc.B, 0.3)}) {
      FbfConfig cfg{inc.A, oracle, StepSchedule::constant(0.9 / inc.B.lipschitz(), 0.05, inc.B.lipschitz()),
                    EpsilonSchedule(0.1, 2.0), 0.5, 0, {}, false};
      auto st = FbfState::start(Point::Ones(bench.dimension()), RngStream(5, static_cast<std::uint64_t>(runs)));
      for (int k = 0; k < 1000; ++k) {
        const auto t = fbf_step_traced(st, cfg);
        worst = std::min(worst, lemma32_expected_residual(t, oracle, bench.reference));
        if (oracle.is_deterministic()) {
          // Independent form of the slack in the zero-noise case.
          const Point dy = t.y - t.w;
          const double L = inc.B.lipschitz();
          const double direct = t.lambda * t.lambda * (L * L * dy.squaredNorm() - (inc.B(t.y) - inc.B(t.w)).squaredNorm());
          const double lib = lemma32_residual(t, inc.B, bench.reference);
          if (std::abs(lib - direct) > 1e-9 * (1 + std::abs(direct) + (t.w - bench.reference).squaredNorm())) {
            return {false, bench.name + ": residual disagrees with its closed form at n = " + std::to_string(k)};
          }
        }
      }
      ++runs;
    }
  }
  return {worst >= -1e-10 && runs == 6, "min residual " + fmt(worst) + " >= -1e-10 over 6 x 1000 steps"};
}

// 4. Recursion bound domination over the parameter grid (24 points with a <= beta).
Outcome recursion_bound() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int grid = 0;
  for (double a : {0.5, 1.0, 2.0})
    for (double alpha : {0.6, 0.75, 1.0})
      for (double beta : {1.5, 2.0, 3.0}) {
        if (a > beta) continue;
        ++grid;
        const auto p = RecursionParams::make(a, 1.0, alpha, beta, 1.0);
        const auto seq = simulate_recursion(p, 10001);
        for (std::uint64_t n = 2 * p.n0; n <= 10000; ++n) {
          worst = std::max(worst, seq.at(n + 1) / lemma36_bound(p, n));
        }
      }
  const double t = seconds_since(t0);
  return {worst <= 1 + 1e-9 && grid == 24 && t <= 10,
          std::to_string(grid) + " grid points, max sequence/bound " + fmt(worst) + " <= 1, " + fmt(t) + " s <= 10 s"};
}

// 5. Primal-dual gap below the certificate, and its rate.
Outcome gap_rate_and_certificate() {
  const auto t0 = Clock::now();
  const auto c = experiment_config_from_json(json{
      {"benchmark", {{"generator", "bilinear_saddle"}, {"d_primal", 10}, {"d_dual", 8}, {"seed", 5}}},
      {"noise", {{"model", "gaussian_constant"}, {"sigma0", 1.0}}},
      {"eps", {{"eps0", 0.1}, {"theta", 2.0}}},
      {"theta", 0.5},
      {"replications", 50},
      {"horizon", 10000},
      {"seed", 2},
      {"fit", {{"window", {1e2, 1e4}}}}});
  const auto res = run_pd_experiment(c, default_workers());
  std::size_t violations = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& row : res.rows) {
    if (!(row.mean_gap <= row.bound)) ++violations;
    if (row.mean_gap > 0) min_ratio = std::min(min_ratio, row.bound / row.mean_gap);
  }
  const double slope = res.verdict->fitted_slope;
  const double t = seconds_since(t0);
  const bool ok = violations == 0 && res.excluded_pairs == 0 && slope >= -1.2 && slope <= -0.8 && t <= 300;
  return {ok, std::to_string(res.rows.size()) + " recorded N, " + std::to_string(violations) +
                  " certificate violations (min bound/gap " + fmt(min_ratio) + "), slope " + fmt(slope) +
                  " in [-1.2, -0.8], " + fmt(t) + " s"};
}

// 6. Zero noise, no inertia: agreement with a plain Tseng loop.
Outcome deterministic_reduction() {
  const auto bench = make_strongly_monotone_affine(20, 1.0, 4.0, 7);
  const auto& inc = *bench.inclusion;
  const Matrix M = matrix_from_json(bench.data.at("M"));
  const Point q = point_from_json(bench.data.at("q"));
  const double lam = 0.9 / inc.B.lipschitz();
  FbfConfig cfg{inc.A, StochasticOracle::gaussian_constant(inc.B, 0.0),
                StepSchedule::constant(lam, 0.05, inc.B.lipschitz()), EpsilonSchedule(0.1, 2.0), 0.0, 0, {}, true};
  auto st = FbfState::start(Point::Ones(20), RngStream(9, 9));
  Point x = Point::Ones(20);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    fbf_step(st, cfg);
    const Point bx = M * x + q;
    const Point y = (x - lam * bx).cwiseMax(-1.0).cwiseMin(1.0);
    x = y - lam * (M * y + q - bx);
    worst = std::max(worst, (st.x_cur - x).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max per-iterate difference " + fmt(worst) + " <= 1e-12 over 1000 steps"};
}

// 7. The full property suite through the CLI.
Outcome property_suites() {
  const auto t0 = Clock::now();
  const std::string cmd = std::string(SFBF_CLI_PATH) + " validate all --out /dev/null 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {false, "could not start the CLI"};
  std::string out;
  char buf[1024];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = pclose(p);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const double t = seconds_since(t0);
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return {code == 0 && t <= 600, "exit " + std::to_string(code) + ", " + fmt(t) + " s <= 600 s (" + out + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"O(1/n) rate, strongly monotone affine", rate_one_over_n},
      {"summable-noise convergence with falsification control", regime_one_proxy},
      {"one-step inequality residual", one_step_inequality},
      {"recursion bound domination", recursion_bound},
      {"primal-dual gap certificate and rate", gap_rate_and_certificate},
      {"deterministic reduction to Tseng", deterministic_reduction},
      {"validate all", property_suites},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
