// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "sfbf/operators.hpp"
#include "sfbf/oracles.hpp"
#include "sfbf/rng.hpp"

namespace sfbf {

/// Differentiable convex function with a stochastic gradient oracle.
struct SmoothFunction {
  std::function<double(const Point&)> value;
  StochasticOracle grad;

  /// 1/2 x^T Q x + c^T x with an exact gradient.
  static SmoothFunction quadratic(Matrix Q, Point c);
  /// weight/2 ||x||^2 on R^dim.
  static SmoothFunction half_squared_norm(Index dim, double weight = 1.0);
  static SmoothFunction zero(Index dim);

  SmoothFunction with_gradient(StochasticOracle oracle) const;
  double lipschitz() const { return grad.base().lipschitz(); }
  Index dim() const { return grad.base().dim(); }
};

/// min_x h(x) + (l* [] g)(Kx) + f(x) and its dual, with K : R^dp -> R^dd.
struct SaddleProblem {
  ProxFunction f;
  ProxFunction g_star;
  SmoothFunction h;
  SmoothFunction ell;
  Matrix K;
  double K_norm = 0.0;

  /// Checks dimensions and that K_norm is at least the spectral norm of K.
  static SaddleProblem make(ProxFunction f, ProxFunction g_star, SmoothFunction h, SmoothFunction ell,
                            Matrix K, std::optional<double> K_norm = std::nullopt);

  Index primal_dim() const { return K.cols(); }
  Index dual_dim() const { return K.rows(); }
  /// max(L_h, L_l).
  double mu() const;
  /// 1 / (sqrt(1 + eps) (mu + ||K||)); admissible steps lie strictly below.
  double step_bound(double eps) const;
  /// (1 - eps_prime) / (mu + ||K||).
  double reparametrized_step(double eps_prime) const;
};

struct PdState {
  std::uint64_t n = 0;
  Point x_prev, x_cur;
  Point v_prev, v_cur;
  Point x0, v0;
  Point last_y, last_z;
  double last_alpha = 0.0;

  double sum_lambda = 0.0;
  Point sum_lambda_y, sum_lambda_z;
  /// Partial sum of eps_n and partial product of (1 + eps_n) over the steps taken.
  double S = 0.0;
  double T = 1.0;
  /// Partial sums of lambda_n^2 E||s - grad(y)||^2 and lambda_n^2 E||r - grad(w)||^2,
  /// with conditional variances evaluated at the realized points.
  double c_s = 0.0;
  double c_r = 0.0;
  bool tracks_variance = true;

  RngStream rng;

  static PdState start(Point x0, Point v0, RngStream rng);
};

struct PdStepOptions {
  /// The eps of the step bound 1 / (sqrt(1 + eps)(mu + ||K||)).
  double step_eps = 0.1;
  /// Skips the step admissibility check (falsification runs).
  bool override_conditions = false;
};

void pd_step(PdState& state, const SaddleProblem& problem, double lambda, double eps_n, double theta,
             const PdStepOptions& options = {});

/// Step-weighted ergodic averages of (y_n, z_n).
std::pair<Point, Point> ergodic_averages(const PdState& state);

/// h(x) + f(x) + <Kx, v> - g*(v) - l(v). +inf when f(x) is infinite, -inf when
/// g*(v) is; nullopt when both are (infeasible pair).
std::optional<double> gap(const SaddleProblem& problem, const Point& x, const Point& v);

/// G(y_hat, v) - G(x, z_hat) for a comparison pair (x, v).
std::optional<double> gap_difference(const SaddleProblem& problem, const Point& y_hat, const Point& z_hat,
                                     const Point& x, const Point& v);

struct GapCertificate {
  std::uint64_t N = 0;
  double bound = 0.0;
  double S = 0.0;
  double T = 1.0;
  double C = 0.0;
  double sum_lambda = 0.0;
};

/// Bound on E[G(y_hat_N, v) - G(x, z_hat_N)] after steps 0..N. C is taken from
/// the state's accumulators unless given.
GapCertificate gap_certificate(const PdState& state, const Point& x, const Point& v, double step_eps,
                               std::optional<double> C = std::nullopt);

struct PowerNorm {
  double estimate = 0.0;
  double safety_factor = 1.01;
  double bound() const { return estimate * safety_factor; }
};

PowerNorm power_iteration_norm(const Matrix& K, std::size_t iterations, std::uint64_t seed);

}  // namespace sfbf
