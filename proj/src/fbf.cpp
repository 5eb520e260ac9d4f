// SPDX-License-Identifier: Apache-2.0
#include "sfbf/fbf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sfbf {

std::vector<std::uint64_t> RecordPolicy::indices(std::uint64_t horizon) const {
  if (record_every == 0) throw ParameterError("record_every must be >= 1");
  std::vector<std::uint64_t> out;
  const std::uint64_t dense_end = std::min(dense_until, horizon);
  for (std::uint64_t n = 0; n <= dense_end; n += record_every) out.push_back(n);
  if (horizon > dense_until && per_decade > 0) {
    const double start = std::log10(static_cast<double>(std::max<std::uint64_t>(dense_until, 1)));
    const double stop = std::log10(static_cast<double>(horizon));
    const auto steps = static_cast<std::size_t>(std::ceil((stop - start) * per_decade));
    for (std::size_t j = 1; j <= steps; ++j) {
      const double e = start + static_cast<double>(j) / static_cast<double>(per_decade);
      const auto n = static_cast<std::uint64_t>(std::llround(std::pow(10.0, e)));
      if (n > dense_until && n <= horizon && (out.empty() || n > out.back())) out.push_back(n);
    }
  }
  if (out.back() != horizon) out.push_back(horizon);
  return out;
}

FbfState FbfState::start(Point x0, RngStream rng) {
  Point copy = x0;
  return start(std::move(copy), std::move(x0), std::move(rng));
}

FbfState FbfState::start(Point x_minus1, Point x0, RngStream rng) {
  require_finite(x0, "initial point");
  require_finite(x_minus1, "initial point x_{-1}");
  if (x0.size() != x_minus1.size()) throw InvalidInput("initial points differ in dimension");
  FbfState s;
  s.x_prev = std::move(x_minus1);
  s.x_cur = std::move(x0);
  s.rng = std::move(rng);
  return s;
}

namespace {

void check_divergence(const Point& x_next, const FbfState& state) {
  if (!x_next.allFinite() || x_next.norm() > kDivergenceThreshold) {
    std::ostringstream msg;
    msg << "iterate diverged at n = " << state.n + 1;
    throw FbfDivergence(msg.str(), state);
  }
}

void advance(FbfState& state, StepTrace& trace) {
  check_divergence(trace.x_next, state);
  state.last_w = trace.w;
  state.last_y = trace.y;
  state.last_alpha = trace.alpha;
  state.last_lambda = trace.lambda;
  state.x_prev = std::move(state.x_cur);
  state.x_cur = trace.x_next;
  ++state.n;
}

// Shared skeleton; backward(lambda, z) applies the resolvent / prox.
template <typename Backward>
StepTrace tseng_step(FbfState& state, const StochasticOracle& B, const StepSchedule& steps,
                     const EpsilonSchedule& eps, double theta, bool disable_inertia, Backward backward) {
  if (state.x_cur.size() != B.base().dim()) throw InvalidInput("state dimension does not match B");
  StepTrace t;
  t.n = state.n;
  t.lambda = steps.at(state.n);
  require_positive_step(t.lambda);
  t.alpha = disable_inertia ? 0.0 : inertia_coefficient(state.x_cur, state.x_prev, eps.at(state.n), theta);
  t.x_cur = state.x_cur;
  t.w = state.x_cur + t.alpha * (state.x_cur - state.x_prev);

  state.rng.seek(state.n, channel::r_primal);
  t.r = B.draw_r(t.w, state.n, state.rng);
  t.y = backward(t.lambda, Point(t.w - t.lambda * t.r));
  state.rng.seek(state.n, channel::s_primal);
  t.s = B.draw_s(t.y, state.n, state.rng);
  t.x_next = t.y - t.lambda * (t.s - t.r);
  advance(state, t);
  return t;
}

}  // namespace

StepTrace fbf_step_traced(FbfState& state, const FbfConfig& config) {
  return tseng_step(state, config.B, config.steps, config.eps, config.theta, config.disable_inertia,
                    [&](double lambda, const Point& z) { return config.A.resolvent(lambda, z); });
}

void fbf_step(FbfState& state, const FbfConfig& config) { fbf_step_traced(state, config); }

StepTrace composite_step(FbfState& state, const ProxFunction& f, const StochasticOracle& grad,
                         const StepSchedule& steps, const EpsilonSchedule& eps, double theta) {
  return tseng_step(state, grad, steps, eps, theta, false,
                    [&](double lambda, const Point& z) { return f.prox(lambda, z); });
}

std::vector<std::string> check_regime(const FbfConfig& config, double margin) {
  std::vector<std::string> warnings;
  const auto horizon = static_cast<std::size_t>(std::max<std::uint64_t>(config.horizon, 10));
  const auto report = validate_summability(config.B, config.steps, std::min<std::size_t>(horizon, 1000));
  const double L = config.B.base().lipschitz();
  if (config.steps.kind() == StepSchedule::Kind::constant) {
    const double lambda = config.steps.lambda();
    if (!(lambda > margin && lambda * L < 1.0 - margin)) {
      std::ostringstream msg;
      msg << "constant step " << lambda << " outside ]" << margin << ", " << (1.0 - margin) / L << "[";
      warnings.push_back(msg.str());
    }
    if (report.noise_condition != Verdict::summable) {
      warnings.push_back("noise variance series is " + std::string(to_string(report.noise_condition)) +
                         ", not summable");
    }
  } else {
    if (!(config.B.base().strong_mod() > 0.0)) {
      warnings.push_back("polynomial steps used but B declares no strong monotonicity");
    }
    if (report.weighted_condition != Verdict::summable) {
      warnings.push_back("step-weighted noise series is " +
                         std::string(to_string(report.weighted_condition)) + ", not summable");
    }
  }
  return warnings;
}

Trajectory run_fbf(const FbfConfig& config, const Point& x_init, const std::optional<Point>& reference,
                   RngStream rng) {
  if (reference && reference->size() != x_init.size()) throw InvalidInput("reference dimension mismatch");
  Trajectory traj;
  traj.warnings = check_regime(config);
  const auto keep = config.record.indices(config.horizon);
  traj.points.reserve(keep.size());

  FbfState state = FbfState::start(x_init, std::move(rng));
  auto record = [&](const FbfState& s) {
    TrajectoryPoint p;
    p.n = s.n;
    if (config.record.keep_points) p.x = s.x_cur;
    if (reference) p.sq_dist = (s.x_cur - *reference).squaredNorm();
    p.alpha = s.last_alpha;
    p.lambda = s.last_lambda;
    traj.points.push_back(std::move(p));
  };

  std::size_t next = 0;
  if (keep[next] == 0) {
    record(state);
    ++next;
  }
  try {
    while (state.n < config.horizon) {
      fbf_step(state, config);
      if (next < keep.size() && keep[next] == state.n) {
        record(state);
        ++next;
      }
    }
  } catch (const FbfDivergence& e) {
    throw TrajectoryDiverged(e.what(), std::move(traj));
  }
  return traj;
}

double lemma32_residual(const StepTrace& t, const LipOperator& B, const Point& p) {
  const double lam = t.lambda;
  const double L = B.lipschitz();
  const Point By = B(t.y);
  const Point Bw = B(t.w);
  const Point s_err = t.s - By;
  const Point r_err = t.r - Bw;
  const double rhs = (t.w - p).squaredNorm() - (1.0 - lam * lam * L * L) * (t.w - t.y).squaredNorm() +
                     lam * lam * (s_err.squaredNorm() + r_err.squaredNorm()) +
                     2.0 * lam * lam * (s_err.dot(By - t.r) + (By - Bw).dot(Bw - t.r)) +
                     2.0 * (t.y - t.w - lam * (By - t.r)).dot(t.y - p) +
                     2.0 * lam * (By - t.s).dot(t.y - p);
  return rhs - (t.x_next - p).squaredNorm();
}

double lemma32_expected_residual(const StepTrace& step, const StochasticOracle& oracle, const Point& p) {
  const auto atoms = oracle.atoms(step.y);
  if (!atoms) {
    throw CapabilityError("expected residual needs a finitely supported oracle (zero noise or finite_sum)");
  }
  double acc = 0.0;
  StepTrace t = step;
  for (const auto& s : *atoms) {
    t.s = s;
    t.x_next = t.y - t.lambda * (s - t.r);
    acc += lemma32_residual(t, oracle.base(), p);
  }
  return acc / static_cast<double>(atoms->size());
}

}  // namespace sfbf
