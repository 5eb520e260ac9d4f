// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sfbf/operators.hpp"
#include "sfbf/rng.hpp"

namespace sfbf {

enum class NoiseModel { gaussian_decay, gaussian_constant, finite_sum };

std::string_view to_string(NoiseModel model);
NoiseModel noise_model_from_string(std::string_view name);

/// RNG channels used within one iteration. The forward estimate r_n and the
/// correction estimate s_n come from independent substreams.
namespace channel {
inline constexpr std::uint64_t r_primal = 0;
inline constexpr std::uint64_t s_primal = 1;
inline constexpr std::uint64_t r_dual = 2;
inline constexpr std::uint64_t s_dual = 3;
}  // namespace channel

/// Randomized estimator of a Lipschitz operator B.
///
/// gaussian_decay adds isotropic noise with per-coordinate standard deviation
/// sigma0 * (n+1)^(-p); gaussian_constant is the p = 0 case; finite_sum picks
/// one of m components uniformly, where B is the mean of the components.
/// All models are unbiased. An optional deterministic perturbation
/// magnitude * (n+1)^(-p) along (1,...,1)/sqrt(d) can be added to r_n only;
/// it is experimental and makes r_n biased.
class StochasticOracle {
 public:
  static StochasticOracle exact(LipOperator base);
  static StochasticOracle gaussian_decay(LipOperator base, double sigma0, double p);
  static StochasticOracle gaussian_constant(LipOperator base, double sigma0);
  /// base must equal the mean of the components.
  static StochasticOracle finite_sum(LipOperator base, std::vector<LipOperator> components);
  /// Uses the component mean as base, with averaged constants.
  static StochasticOracle finite_sum(std::vector<LipOperator> components);

  StochasticOracle with_r_bias(double magnitude, double p) const;

  /// Estimate r_n of B(w) at iteration n.
  Point draw_r(const Point& w, std::uint64_t n, RngStream& rng) const;
  /// Unbiased estimate s_n of B(y) at iteration n.
  Point draw_s(const Point& y, std::uint64_t n, RngStream& rng) const;

  /// Per-coordinate noise standard deviation at iteration n (gaussian models).
  double noise_std(std::uint64_t n) const;
  /// E||sample - B(at)||^2 of the unbiased part at iteration n.
  double conditional_variance(const Point& at, std::uint64_t n) const;
  /// ||bias_n||^2 of the experimental r-perturbation.
  double r_bias_squared(std::uint64_t n) const;
  /// Equally likely outcomes of draw_s at a point, when the support is
  /// finite (zero noise or finite_sum).
  std::optional<std::vector<Point>> atoms(const Point& at) const;

  bool is_deterministic() const;
  const LipOperator& base() const { return base_; }
  NoiseModel model() const { return model_; }
  double sigma0() const { return sigma0_; }
  double decay() const { return p_; }
  std::size_t component_count() const { return components_.size(); }
  double r_bias_magnitude() const { return bias_magnitude_; }
  double r_bias_decay() const { return bias_p_; }

 private:
  StochasticOracle(LipOperator base, NoiseModel model) : base_(std::move(base)), model_(model) {}
  Point sample(const Point& at, std::uint64_t n, RngStream& rng) const;

  LipOperator base_;
  NoiseModel model_;
  double sigma0_ = 0.0;
  double p_ = 0.0;
  std::vector<LipOperator> components_;
  double bias_magnitude_ = 0.0;
  double bias_p_ = 1.0;
};

/// eps_n = eps0 * (n+1)^(-theta_exp), n = 0, 1, ...
class EpsilonSchedule {
 public:
  EpsilonSchedule(double eps0, double theta_exp);
  static EpsilonSchedule none() { return EpsilonSchedule(0.0, 2.0); }

  double at(std::uint64_t n) const;
  double partial_sum(std::uint64_t horizon) const;
  /// eps0 * theta/(theta-1) + eps0, an upper bound on every partial sum.
  double sum_bound() const;

  double eps0() const { return eps0_; }
  double theta_exp() const { return theta_exp_; }

 private:
  double eps0_;
  double theta_exp_;
};

/// Step sizes lambda_n for algorithm iteration n = 0, 1, ...
///
/// constant: lambda in ]margin, (1 - margin)/L[.
/// polynomial: lambda = 4a / (mu k^alpha) evaluated at k = n + 1, so the
/// first iteration uses k = 1.
class StepSchedule {
 public:
  enum class Kind { constant, polynomial };

  static StepSchedule constant(double lambda, double margin, double lipschitz);
  /// Constant step with no admissibility check, for falsification runs.
  static StepSchedule constant_unchecked(double lambda);
  static StepSchedule polynomial(double a, double alpha, double mu);

  double at(std::uint64_t n) const;
  /// 4a / (mu k^alpha) for k >= 1.
  double polynomial_value(std::uint64_t k) const;

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double margin() const { return margin_; }
  double a() const { return a_; }
  double alpha() const { return alpha_; }
  double mu() const { return mu_; }

 private:
  StepSchedule() = default;
  Kind kind_ = Kind::constant;
  double lambda_ = 0.0;
  double margin_ = 0.0;
  double a_ = 0.0;
  double alpha_ = 1.0;
  double mu_ = 1.0;
};

enum class Verdict { summable, divergent, bounded_only };
std::string_view to_string(Verdict v);

/// Partial sums of the noise series appearing in the convergence conditions.
///
/// noise_terms[n] = E||s_n - By_n||^2 + ||r_n - Bw_n||^2 (expected), i.e. the
/// summands of the general-regime condition; weighted_terms[n] multiplies them
/// by lambda_n^2 (strongly monotone regime condition).
struct SummabilityReport {
  std::vector<double> noise_partial_sums;
  std::vector<double> weighted_partial_sums;
  Verdict noise_condition = Verdict::summable;
  Verdict weighted_condition = Verdict::summable;
};

/// State-dependent variances (finite_sum) are evaluated at probe, which
/// defaults to the origin.
SummabilityReport validate_summability(const StochasticOracle& oracle, const StepSchedule& steps,
                                       std::size_t horizon,
                                       const std::optional<Point>& probe = std::nullopt);

/// Threshold below which x_n and x_{n-1} are treated as equal.
double inertia_equality_tolerance(const Point& x_cur);

/// alpha_n = theta if x_n == x_{n-1}, else min(eps_n / ||x_n - x_{n-1}||, theta).
double inertia_coefficient(const Point& x_cur, const Point& x_prev, double eps_n, double theta);

// JSON schedule descriptors:
//   {"noise": {"model": "...", "sigma0": x, "p": y}, "eps": {"eps0": x, "theta": y},
//    "step": {"kind": "constant", "lambda": x, "margin": m} |
//            {"kind": "polynomial", "a": x, "alpha": y, "mu": z}}
struct NoiseSpec {
  NoiseModel model = NoiseModel::gaussian_constant;
  double sigma0 = 0.0;
  double p = 0.0;
};
NoiseSpec noise_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NoiseSpec& spec);
EpsilonSchedule epsilon_schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EpsilonSchedule& eps);
/// A constant step may omit "lambda"; it then defaults to 0.9 / L.
StepSchedule step_schedule_from_json(const nlohmann::json& j, double lipschitz);
nlohmann::json to_json(const StepSchedule& steps);

}  // namespace sfbf
