// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfbf/errors.hpp"
#include "sfbf/operators.hpp"
#include "sfbf/oracles.hpp"
#include "sfbf/rng.hpp"

namespace sfbf {

/// Which iterations a run keeps. Every record_every-th iteration up to
/// dense_until, then per_decade log-spaced indices per decade. n = 0 and the
/// final iterate are always kept.
struct RecordPolicy {
  std::uint64_t record_every = 1;
  std::uint64_t dense_until = 1000;
  std::size_t per_decade = 100;
  bool keep_points = true;

  std::vector<std::uint64_t> indices(std::uint64_t horizon) const;
};

struct FbfConfig {
  MonotoneMap A = MonotoneMap::zero();
  StochasticOracle B;
  StepSchedule steps;
  EpsilonSchedule eps = EpsilonSchedule::none();
  double theta = 0.0;
  std::uint64_t horizon = 0;
  RecordPolicy record;
  /// Forces alpha_n = 0 regardless of theta (plain stochastic Tseng).
  bool disable_inertia = false;
};

struct FbfState {
  std::uint64_t n = 0;
  Point x_prev;
  Point x_cur;
  Point last_w;
  Point last_y;
  double last_alpha = 0.0;
  double last_lambda = 0.0;
  RngStream rng;

  /// State at n = 0 with x_{-1} = x_0.
  static FbfState start(Point x0, RngStream rng);
  /// State at n = 0 with explicit x_{-1}.
  static FbfState start(Point x_minus1, Point x0, RngStream rng);
};

/// Everything computed during one iteration.
struct StepTrace {
  std::uint64_t n = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  Point x_cur;
  Point w;
  Point r;
  Point y;
  Point s;
  Point x_next;
};

/// Thrown by fbf_step when the new iterate is non-finite or ||x|| > 1e12.
/// Carries the last state whose iterate was finite.
class FbfDivergence : public DivergenceError {
 public:
  FbfDivergence(const std::string& what, FbfState last) : DivergenceError(what), last_(std::move(last)) {}
  const FbfState& last_state() const { return last_; }

 private:
  FbfState last_;
};

inline constexpr double kDivergenceThreshold = 1e12;

/// One iteration of the stochastic inertial Tseng method; advances state.
void fbf_step(FbfState& state, const FbfConfig& config);
StepTrace fbf_step_traced(FbfState& state, const FbfConfig& config);

/// One composite iteration for min f + h, with h's stochastic gradient given
/// by grad. Uses the same random channels as fbf_step, so it agrees with
/// fbf_step for A = subdifferential of f and B = grad.
StepTrace composite_step(FbfState& state, const ProxFunction& f, const StochasticOracle& grad,
                         const StepSchedule& steps, const EpsilonSchedule& eps, double theta);

struct TrajectoryPoint {
  std::uint64_t n = 0;
  Point x;  // empty unless RecordPolicy::keep_points
  std::optional<double> sq_dist;
  double alpha = 0.0;
  double lambda = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::vector<std::string> warnings;
};

class TrajectoryDiverged : public DivergenceError {
 public:
  TrajectoryDiverged(const std::string& what, Trajectory partial)
      : DivergenceError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Messages describing which convergence hypotheses the configuration fails.
/// Empty when it matches the general regime (constant admissible step with
/// summable noise) or the strongly monotone regime (polynomial steps with
/// step-weighted summable noise).
std::vector<std::string> check_regime(const FbfConfig& config, double margin = 0.05);

Trajectory run_fbf(const FbfConfig& config, const Point& x_init, const std::optional<Point>& reference,
                   RngStream rng);

/// RHS - LHS of the one-step inequality for a solution p, evaluated on one
/// realized step. B is the exact operator, L its Lipschitz constant.
double lemma32_residual(const StepTrace& step, const LipOperator& B, const Point& p);

/// Conditional expectation of the residual over the finitely many outcomes of
/// s_n given everything up to r_n. Throws CapabilityError when the oracle's
/// distribution is not finitely supported.
double lemma32_expected_residual(const StepTrace& step, const StochasticOracle& oracle, const Point& p);

}  // namespace sfbf
