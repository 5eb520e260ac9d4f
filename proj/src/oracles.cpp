// SPDX-License-Identifier: Apache-2.0
#include "sfbf/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfbf/errors.hpp"

namespace sfbf {

std::string_view to_string(NoiseModel model) {
  switch (model) {
    case NoiseModel::gaussian_decay: return "gaussian_decay";
    case NoiseModel::gaussian_constant: return "gaussian_constant";
    case NoiseModel::finite_sum: return "finite_sum";
  }
  return "unknown";
}

NoiseModel noise_model_from_string(std::string_view name) {
  if (name == "gaussian_decay") return NoiseModel::gaussian_decay;
  if (name == "gaussian_constant") return NoiseModel::gaussian_constant;
  if (name == "finite_sum") return NoiseModel::finite_sum;
  throw ParseError("unknown noise model '" + std::string(name) + "'");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::summable: return "summable";
    case Verdict::divergent: return "divergent";
    case Verdict::bounded_only: return "bounded-only";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// StochasticOracle
// ---------------------------------------------------------------------------

StochasticOracle StochasticOracle::exact(LipOperator base) {
  return gaussian_constant(std::move(base), 0.0);
}

StochasticOracle StochasticOracle::gaussian_decay(LipOperator base, double sigma0, double p) {
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) throw ParameterError("noise: sigma0 must be >= 0");
  if (!(p >= 0.0) || !std::isfinite(p)) throw ParameterError("noise: decay p must be >= 0");
  StochasticOracle o(std::move(base), NoiseModel::gaussian_decay);
  o.sigma0_ = sigma0;
  o.p_ = p;
  return o;
}

StochasticOracle StochasticOracle::gaussian_constant(LipOperator base, double sigma0) {
  StochasticOracle o = gaussian_decay(std::move(base), sigma0, 0.0);
  o.model_ = NoiseModel::gaussian_constant;
  return o;
}

StochasticOracle StochasticOracle::finite_sum(LipOperator base, std::vector<LipOperator> components) {
  if (components.empty()) throw InvalidInput("finite_sum: need at least one component");
  for (const auto& c : components) {
    if (c.dim() != base.dim()) throw InvalidInput("finite_sum: component dimension mismatch");
  }
  // Probe the mean identity at a few fixed points.
  const Index d = base.dim();
  for (const Point& x : {Point(Point::Zero(d)), Point(Point::Ones(d)), Point(Point::LinSpaced(d, -1.0, 2.0))}) {
    Point mean = Point::Zero(d);
    for (const auto& c : components) mean += c(x);
    mean /= static_cast<double>(components.size());
    const Point bx = base(x);
    if ((mean - bx).norm() > 1e-10 * (1.0 + bx.norm())) {
      throw ParameterError("finite_sum: base operator is not the mean of the components");
    }
  }
  StochasticOracle o(std::move(base), NoiseModel::finite_sum);
  o.components_ = std::move(components);
  return o;
}

StochasticOracle StochasticOracle::finite_sum(std::vector<LipOperator> components) {
  if (components.empty()) throw InvalidInput("finite_sum: need at least one component");
  const auto m = static_cast<double>(components.size());
  double lip = 0.0, mod = 0.0;
  for (const auto& c : components) {
    lip += c.lipschitz() / m;
    mod += c.strong_mod() / m;
  }
  const Index d = components.front().dim();
  LipOperator mean(
      d,
      [components](const Point& x) -> Point {
        Point acc = Point::Zero(x.size());
        for (const auto& c : components) acc += c(x);
        return acc / static_cast<double>(components.size());
      },
      lip, std::min(mod, lip));
  return finite_sum(std::move(mean), std::move(components));
}

StochasticOracle StochasticOracle::with_r_bias(double magnitude, double p) const {
  if (!(magnitude >= 0.0) || !(p >= 0.0)) throw ParameterError("r bias: need magnitude, p >= 0");
  StochasticOracle o = *this;
  o.bias_magnitude_ = magnitude;
  o.bias_p_ = p;
  return o;
}

double StochasticOracle::noise_std(std::uint64_t n) const {
  if (model_ == NoiseModel::finite_sum || sigma0_ == 0.0) return 0.0;
  return sigma0_ * std::pow(static_cast<double>(n) + 1.0, -p_);
}

Point StochasticOracle::sample(const Point& at, std::uint64_t n, RngStream& rng) const {
  require_finite(at, "oracle query point");
  if (model_ == NoiseModel::finite_sum) {
    return components_[rng.below(components_.size())](at);
  }
  Point value = base_(at);
  const double sd = noise_std(n);
  if (sd > 0.0) {
    for (Index i = 0; i < value.size(); ++i) value[i] += sd * rng.normal();
  }
  return value;
}

Point StochasticOracle::draw_r(const Point& w, std::uint64_t n, RngStream& rng) const {
  Point r = sample(w, n, rng);
  if (bias_magnitude_ > 0.0) {
    const double scale = bias_magnitude_ * std::pow(static_cast<double>(n) + 1.0, -bias_p_) /
                         std::sqrt(static_cast<double>(r.size()));
    r.array() += scale;
  }
  return r;
}

Point StochasticOracle::draw_s(const Point& y, std::uint64_t n, RngStream& rng) const {
  return sample(y, n, rng);
}

double StochasticOracle::conditional_variance(const Point& at, std::uint64_t n) const {
  if (model_ == NoiseModel::finite_sum) {
    const Point mean = base_(at);
    double acc = 0.0;
    for (const auto& c : components_) acc += (c(at) - mean).squaredNorm();
    return acc / static_cast<double>(components_.size());
  }
  const double sd = noise_std(n);
  return static_cast<double>(base_.dim()) * sd * sd;
}

double StochasticOracle::r_bias_squared(std::uint64_t n) const {
  if (bias_magnitude_ == 0.0) return 0.0;
  const double b = bias_magnitude_ * std::pow(static_cast<double>(n) + 1.0, -bias_p_);
  return b * b;
}

std::optional<std::vector<Point>> StochasticOracle::atoms(const Point& at) const {
  if (model_ == NoiseModel::finite_sum) {
    std::vector<Point> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c(at));
    return out;
  }
  if (sigma0_ == 0.0) return std::vector<Point>{base_(at)};
  return std::nullopt;
}

bool StochasticOracle::is_deterministic() const {
  if (bias_magnitude_ > 0.0) return false;
  if (model_ == NoiseModel::finite_sum) return components_.size() == 1;
  return sigma0_ == 0.0;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

EpsilonSchedule::EpsilonSchedule(double eps0, double theta_exp) : eps0_(eps0), theta_exp_(theta_exp) {
  if (!(eps0 >= 0.0) || !std::isfinite(eps0)) throw ParameterError("eps schedule: eps0 must be >= 0");
  if (!(theta_exp > 1.0) || !std::isfinite(theta_exp)) {
    throw ParameterError("eps schedule: theta must be > 1 for summability");
  }
}

double EpsilonSchedule::at(std::uint64_t n) const {
  return eps0_ * std::pow(static_cast<double>(n) + 1.0, -theta_exp_);
}

double EpsilonSchedule::partial_sum(std::uint64_t horizon) const {
  double acc = 0.0;
  for (std::uint64_t n = 0; n <= horizon; ++n) acc += at(n);
  return acc;
}

double EpsilonSchedule::sum_bound() const {
  return eps0_ * theta_exp_ / (theta_exp_ - 1.0) + eps0_;
}

StepSchedule StepSchedule::constant(double lambda, double margin, double lipschitz) {
  if (!(margin > 0.0) || !(margin < 0.5)) throw ParameterError("constant step: margin must be in (0, 1/2)");
  if (!(lipschitz > 0.0)) throw ParameterError("constant step: Lipschitz constant must be positive");
  if (!(lambda > margin) || !(lambda * lipschitz < 1.0 - margin)) {
    throw ParameterError("constant step " + std::to_string(lambda) + " outside ]" +
                         std::to_string(margin) + ", " + std::to_string((1.0 - margin) / lipschitz) +
                         "[");
  }
  StepSchedule s;
  s.kind_ = Kind::constant;
  s.lambda_ = lambda;
  s.margin_ = margin;
  return s;
}

StepSchedule StepSchedule::constant_unchecked(double lambda) {
  require_positive_step(lambda);
  StepSchedule s;
  s.kind_ = Kind::constant;
  s.lambda_ = lambda;
  return s;
}

StepSchedule StepSchedule::polynomial(double a, double alpha, double mu) {
  if (!(a > 0.0)) throw ParameterError("polynomial step: a must be positive");
  if (!(alpha > 0.5) || !(alpha <= 1.0)) throw ParameterError("polynomial step: alpha must be in (1/2, 1]");
  if (!(mu > 0.0)) throw ParameterError("polynomial step: mu must be positive");
  StepSchedule s;
  s.kind_ = Kind::polynomial;
  s.a_ = a;
  s.alpha_ = alpha;
  s.mu_ = mu;
  return s;
}

double StepSchedule::polynomial_value(std::uint64_t k) const {
  if (k == 0) throw DomainError("polynomial step is defined for k >= 1");
  return 4.0 * a_ / (mu_ * std::pow(static_cast<double>(k), alpha_));
}

double StepSchedule::at(std::uint64_t n) const {
  return kind_ == Kind::constant ? lambda_ : polynomial_value(n + 1);
}

// ---------------------------------------------------------------------------
// Summability
// ---------------------------------------------------------------------------

namespace {

Verdict worst(Verdict a, Verdict b) {
  if (a == Verdict::divergent || b == Verdict::divergent) return Verdict::divergent;
  if (a == Verdict::bounded_only || b == Verdict::bounded_only) return Verdict::bounded_only;
  return Verdict::summable;
}

// Verdict for the series sum_n C (n+1)^(-exponent).
Verdict power_series(double coefficient, double exponent) {
  if (coefficient == 0.0 || exponent > 1.0) return Verdict::summable;
  return Verdict::divergent;
}

}  // namespace

SummabilityReport validate_summability(const StochasticOracle& oracle, const StepSchedule& steps,
                                       std::size_t horizon, const std::optional<Point>& probe) {
  if (horizon < 10) throw ParameterError("validate_summability: horizon must be >= 10");
  const Point at = probe.value_or(Point::Zero(oracle.base().dim()));

  SummabilityReport report;
  report.noise_partial_sums.reserve(horizon);
  report.weighted_partial_sums.reserve(horizon);
  double noise = 0.0, weighted = 0.0;
  for (std::size_t n = 0; n < horizon; ++n) {
    // r_n and s_n share the unbiased noise model; r_n may carry the bias.
    const double term = 2.0 * oracle.conditional_variance(at, n) + oracle.r_bias_squared(n);
    const double lambda = steps.at(n);
    noise += term;
    weighted += lambda * lambda * term;
    report.noise_partial_sums.push_back(noise);
    report.weighted_partial_sums.push_back(weighted);
  }

  const double step_exponent =
      steps.kind() == StepSchedule::Kind::polynomial ? 2.0 * steps.alpha() : 0.0;

  Verdict unbiased_plain, unbiased_weighted;
  if (oracle.model() == NoiseModel::finite_sum) {
    // State-dependent variance: bounded on bounded sets, no decay guaranteed.
    const bool zero = oracle.component_count() == 1;
    unbiased_plain = zero ? Verdict::summable : Verdict::bounded_only;
    unbiased_weighted =
        zero || step_exponent > 1.0 ? Verdict::summable : Verdict::bounded_only;
  } else {
    const double coefficient = oracle.sigma0();
    unbiased_plain = power_series(coefficient, 2.0 * oracle.decay());
    unbiased_weighted = power_series(coefficient, 2.0 * oracle.decay() + step_exponent);
  }
  const double bias = oracle.r_bias_magnitude();
  report.noise_condition = worst(unbiased_plain, power_series(bias, 2.0 * oracle.r_bias_decay()));
  report.weighted_condition =
      worst(unbiased_weighted, power_series(bias, 2.0 * oracle.r_bias_decay() + step_exponent));
  return report;
}

// ---------------------------------------------------------------------------
// Inertia
// ---------------------------------------------------------------------------

double inertia_equality_tolerance(const Point& x_cur) { return 1e-14 * (1.0 + x_cur.norm()); }

double inertia_coefficient(const Point& x_cur, const Point& x_prev, double eps_n, double theta) {
  if (!(theta >= 0.0) || !(theta <= 1.0)) throw ParameterError("inertia: theta must be in [0, 1]");
  if (!(eps_n >= 0.0)) throw ParameterError("inertia: eps_n must be >= 0");
  if (x_cur.size() != x_prev.size()) throw InvalidInput("inertia: dimension mismatch");
  const double displacement = (x_cur - x_prev).norm();
  if (displacement <= inertia_equality_tolerance(x_cur)) return theta;
  return std::min(eps_n / displacement, theta);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

NoiseSpec noise_spec_from_json(const nlohmann::json& j) {
  try {
    NoiseSpec spec;
    spec.model = noise_model_from_string(j.value("model", std::string("gaussian_constant")));
    spec.sigma0 = j.value("sigma0", 0.0);
    spec.p = spec.model == NoiseModel::gaussian_constant ? 0.0 : j.value("p", 0.0);
    if (!(spec.sigma0 >= 0.0) || !(spec.p >= 0.0)) throw ParameterError("noise: sigma0, p must be >= 0");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("noise descriptor: ") + e.what());
  }
}

nlohmann::json to_json(const NoiseSpec& spec) {
  return {{"model", to_string(spec.model)}, {"sigma0", spec.sigma0}, {"p", spec.p}};
}

EpsilonSchedule epsilon_schedule_from_json(const nlohmann::json& j) {
  try {
    return EpsilonSchedule(j.value("eps0", 0.0), j.value("theta", 2.0));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("eps descriptor: ") + e.what());
  }
}

nlohmann::json to_json(const EpsilonSchedule& eps) {
  return {{"eps0", eps.eps0()}, {"theta", eps.theta_exp()}};
}

StepSchedule step_schedule_from_json(const nlohmann::json& j, double lipschitz) {
  try {
    const auto kind = j.value("kind", std::string("constant"));
    if (kind == "constant") {
      const double margin = j.value("margin", 0.05);
      const double lambda = j.value("lambda", 0.9 / lipschitz);
      if (j.value("unchecked", false)) return StepSchedule::constant_unchecked(lambda);
      return StepSchedule::constant(lambda, margin, lipschitz);
    }
    if (kind == "polynomial") {
      return StepSchedule::polynomial(j.at("a").get<double>(), j.value("alpha", 1.0),
                                      j.at("mu").get<double>());
    }
    throw ParseError("unknown step kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("step descriptor: ") + e.what());
  }
}

nlohmann::json to_json(const StepSchedule& steps) {
  if (steps.kind() == StepSchedule::Kind::constant) {
    return {{"kind", "constant"}, {"lambda", steps.lambda()}, {"margin", steps.margin()}};
  }
  return {{"kind", "polynomial"}, {"a", steps.a()}, {"alpha", steps.alpha()}, {"mu", steps.mu()}};
}

}  // namespace sfbf
