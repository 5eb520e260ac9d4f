// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "sfbf/errors.hpp"
#include "sfbf/oracles.hpp"

namespace sfbf {
namespace {

using test::pt;

LipOperator affine2() {
  Matrix M(2, 2);
  M << 2, 1, -1, 2;
  return LipOperator::affine(M, pt({0.5, -1}));
}

std::vector<LipOperator> two_components() {
  Matrix M(2, 2), E(2, 2);
  M << 2, 1, -1, 2;
  E << 0, 0.5, -0.5, 0;
  return {LipOperator::affine(M + E, pt({1.5, 0})), LipOperator::affine(M - E, pt({-0.5, -2}))};
}

TEST(Draw, ZeroNoiseIsExact) {
  const auto B = affine2();
  const auto o = StochasticOracle::gaussian_decay(B, 0.0, 1.0);
  RngStream rng(1, 0);
  const Point w = pt({0.3, -0.7});
  for (std::uint64_t n : {0u, 5u, 1000u}) {
    EXPECT_EQ(o.draw_r(w, n, rng), B(w));
    EXPECT_EQ(o.draw_s(w, n, rng), B(w));
  }
  EXPECT_TRUE(o.is_deterministic());
}

TEST(Draw, DecayScheduleStd) {
  const auto o = StochasticOracle::gaussian_decay(affine2(), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(o.noise_std(3), 0.25);
  EXPECT_DOUBLE_EQ(o.conditional_variance(pt({0, 0}), 3), 2 * 0.0625);
}

// Monte-Carlo oracle: sample mean within 4 standard errors of B(y), sample
// variance matching the declared conditional variance.
void check_unbiased(const StochasticOracle& o, const Point& y, std::uint64_t n) {
  const int N = 100000;
  RngStream rng(77, 3);
  const Index d = y.size();
  Point sum = Point::Zero(d), sum2 = Point::Zero(d);
  for (int k = 0; k < N; ++k) {
    rng.seek(static_cast<std::uint64_t>(k), channel::s_primal);
    const Point s = o.draw_s(y, n, rng);
    sum += s;
    sum2 += s.cwiseProduct(s);
  }
  const Point mean = sum / N;
  const Point var = sum2 / N - mean.cwiseProduct(mean);
  const Point By = o.base()(y);
  for (Index i = 0; i < d; ++i) {
    const double se = std::sqrt(std::max(var[i], 1e-300) / N);
    EXPECT_LE(std::abs(mean[i] - By[i]), 4 * se) << to_string(o.model()) << " coordinate " << i;
  }
  EXPECT_NEAR(var.sum(), o.conditional_variance(y, n), 0.03 * o.conditional_variance(y, n));
}

TEST(Draw, UnbiasedGaussianDecay) { check_unbiased(StochasticOracle::gaussian_decay(affine2(), 2.0, 0.5), pt({1, 2}), 3); }

TEST(Draw, UnbiasedGaussianConstant) { check_unbiased(StochasticOracle::gaussian_constant(affine2(), 0.7), pt({-1, 0}), 9); }

TEST(Draw, UnbiasedFiniteSum) {
  const auto o = StochasticOracle::finite_sum(affine2(), two_components());
  check_unbiased(o, pt({0.4, -0.2}), 0);
  const auto atoms = o.atoms(pt({0.4, -0.2}));
  ASSERT_TRUE(atoms.has_value());
  EXPECT_EQ(atoms->size(), 2u);
}

TEST(Draw, FiniteSumBaseMustBeMean) {
  EXPECT_THROW(StochasticOracle::finite_sum(LipOperator::identity(2), two_components()), ParameterError);
  const auto o = StochasticOracle::finite_sum(two_components());
  const Point x = pt({1, 1});
  EXPECT_LT((o.base()(x) - affine2()(x)).norm(), 1e-14);
}

TEST(Draw, SameStreamSameSamples) {
  const auto o = StochasticOracle::gaussian_constant(affine2(), 1.0);
  RngStream a(5, 6), b(5, 6);
  a.seek(10, channel::s_primal);
  b.seek(10, channel::s_primal);
  EXPECT_EQ(o.draw_s(pt({0, 1}), 10, a), o.draw_s(pt({0, 1}), 10, b));
}

TEST(Draw, RBiasOnlyAffectsR) {
  const auto B = affine2();
  const auto o = StochasticOracle::exact(B).with_r_bias(0.5, 1.0);
  RngStream rng(0, 0);
  const Point w = pt({0, 0});
  EXPECT_NEAR((o.draw_r(w, 1, rng) - B(w)).norm(), 0.25, 1e-15);
  EXPECT_EQ(o.draw_s(w, 1, rng), B(w));
  EXPECT_DOUBLE_EQ(o.r_bias_squared(1), 0.0625);
}

TEST(Summability, Verdicts) {
  const auto B = affine2();
  const auto constant = StepSchedule::constant(0.3, 0.05, B.lipschitz());
  auto r = validate_summability(StochasticOracle::gaussian_decay(B, 1.0, 1.0), constant, 1000);
  EXPECT_EQ(r.noise_condition, Verdict::summable);
  r = validate_summability(StochasticOracle::gaussian_constant(B, 1.0), constant, 1000);
  EXPECT_EQ(r.noise_condition, Verdict::divergent);
  r = validate_summability(StochasticOracle::gaussian_constant(B, 1.0), StepSchedule::polynomial(1.0, 1.0, 1.0), 1000);
  EXPECT_EQ(r.weighted_condition, Verdict::summable);
  EXPECT_EQ(r.noise_partial_sums.size(), 1000u);
  for (std::size_t i = 1; i < r.noise_partial_sums.size(); ++i)
    EXPECT_GE(r.noise_partial_sums[i], r.noise_partial_sums[i - 1]);
  EXPECT_EQ(to_string(Verdict::bounded_only), "bounded-only");
}

TEST(Inertia, Examples) {
  EXPECT_DOUBLE_EQ(inertia_coefficient(pt({1, 2}), pt({1, 2}), 0.0, 0.9), 0.9);
  EXPECT_DOUBLE_EQ(inertia_coefficient(pt({0.5}), pt({0}), 0.1, 0.9), 0.2);
  EXPECT_DOUBLE_EQ(inertia_coefficient(pt({0.5}), pt({0}), 10.0, 0.3), 0.3);
  EXPECT_THROW(inertia_coefficient(pt({0}), pt({1}), 0.1, 1.5), ParameterError);
  EXPECT_THROW(inertia_coefficient(pt({0}), pt({1}), -0.1, 0.5), ParameterError);
}

// Property: alpha <= theta and alpha * ||dx|| <= eps_n + tol * theta.
TEST(Inertia, BoundHoldsOnRandomInputs) {
  RngStream rng(21, 0);
  for (int k = 0; k < 5000; ++k) {
    const Index d = 1 + static_cast<Index>(rng.below(6));
    const Point x = test::random_point(rng, d);
    const double scale = std::pow(10.0, -16.0 + 17.0 * rng.uniform());
    const Point xp = x + scale * test::random_point(rng, d);
    const double eps = rng.uniform() < 0.2 ? 0.0 : std::pow(10.0, -6.0 + 6.0 * rng.uniform());
    const double theta = rng.uniform();
    const double a = inertia_coefficient(x, xp, eps, theta);
    EXPECT_LE(a, theta);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a * (x - xp).norm(), eps + inertia_equality_tolerance(x) * theta + 1e-300);
  }
}

TEST(Schedules, PolynomialLaw) {
  const auto s = StepSchedule::polynomial(2.0, 0.75, 1.5);
  for (std::uint64_t k = 1; k < 5000; k += 37) {
    const double expect = 4 * 2.0 / (1.5 * std::pow(static_cast<double>(k), 0.75));
    EXPECT_NEAR(s.polynomial_value(k), expect, 1e-15 * expect);
    EXPECT_EQ(s.at(k - 1), s.polynomial_value(k));
  }
  EXPECT_THROW(StepSchedule::polynomial(1.0, 0.5, 1.0), ParameterError);
  EXPECT_THROW(StepSchedule::polynomial(1.0, 1.1, 1.0), ParameterError);
  EXPECT_THROW(StepSchedule::polynomial(0.0, 1.0, 1.0), ParameterError);
}

TEST(Schedules, ConstantInterval) {
  EXPECT_NO_THROW(StepSchedule::constant(0.9, 0.05, 1.0));
  EXPECT_THROW(StepSchedule::constant(0.96, 0.05, 1.0), ParameterError);
  EXPECT_THROW(StepSchedule::constant(0.04, 0.05, 1.0), ParameterError);
  EXPECT_THROW(StepSchedule::constant(0.3, 0.6, 1.0), ParameterError);
  EXPECT_DOUBLE_EQ(StepSchedule::constant_unchecked(7.0).at(123), 7.0);
}

TEST(Schedules, EpsilonPartialSumsBounded) {
  for (double theta : {1.1, 1.5, 2.0, 4.0}) {
    const EpsilonSchedule e(0.3, theta);
    double prev = 0.0;
    for (std::uint64_t h = 1; h < 100000; h *= 3) {
      const double s = e.partial_sum(h);
      EXPECT_GE(s, prev);
      EXPECT_LE(s, e.sum_bound());
      prev = s;
    }
    EXPECT_DOUBLE_EQ(e.sum_bound(), 0.3 * theta / (theta - 1) + 0.3);
  }
  EXPECT_DOUBLE_EQ(EpsilonSchedule(0.1, 2.0).at(1), 0.025);
  EXPECT_THROW(EpsilonSchedule(0.1, 1.0), ParameterError);
  EXPECT_THROW(EpsilonSchedule(-0.1, 2.0), ParameterError);
}

TEST(Json, Schedules) {
  const auto noise = noise_spec_from_json(nlohmann::json{{"model", "gaussian_decay"}, {"sigma0", 0.5}, {"p", 1.0}});
  EXPECT_EQ(noise.model, NoiseModel::gaussian_decay);
  EXPECT_EQ(to_json(noise_spec_from_json(to_json(noise))), to_json(noise));
  const auto steps = step_schedule_from_json(nlohmann::json{{"kind", "constant"}}, 2.0);
  EXPECT_DOUBLE_EQ(steps.lambda(), 0.45);
  const auto eps = epsilon_schedule_from_json(nlohmann::json{{"eps0", 0.1}, {"theta", 2.0}});
  EXPECT_DOUBLE_EQ(eps.at(0), 0.1);
  EXPECT_THROW(noise_spec_from_json(nlohmann::json{{"model", "cauchy"}}), ParseError);
}

}  // namespace
}  // namespace sfbf
