// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "sfbf/errors.hpp"
#include "sfbf/problems.hpp"
#include "sfbf/saddle.hpp"

namespace sfbf {
namespace {

using test::pt;

SaddleProblem scalar_bilinear(double k = 1.0) {
  return SaddleProblem::make(ProxFunction::box_indicator(1, -1.0, 1.0), ProxFunction::box_indicator(1, -1.0, 1.0),
                             SmoothFunction::zero(1), SmoothFunction::zero(1), Matrix::Constant(1, 1, k));
}

TEST(PdStep, AllZeroProblemIsIdentityMap) {
  const auto pb = SaddleProblem::make(ProxFunction::zero(), ProxFunction::zero(), SmoothFunction::zero(2),
                                      SmoothFunction::zero(3), Matrix::Zero(3, 2), 1.0);
  auto st = PdState::start(pt({1, -2}), pt({0.5, 3, -1}), RngStream(0, 0));
  pd_step(st, pb, 0.5, 0.0, 0.0);
  EXPECT_EQ(st.last_y, pt({1, -2}));
  EXPECT_EQ(st.last_z, pt({0.5, 3, -1}));
  EXPECT_EQ(st.x_cur, st.last_y);
  EXPECT_EQ(st.v_cur, st.last_z);
}

TEST(PdStep, ScalarBilinearHandStep) {
  // Scripted step from (x, v) = (1, 0), lambda = 0.4, K = 1, zero gradients.
  const double lam = 0.4, x = 1.0, v = 0.0;
  const double y = std::clamp(x - lam * v, -1.0, 1.0);
  const double z = std::clamp(v + lam * x, -1.0, 1.0);
  const double v_next = z + lam * (y - x);
  const double x_next = y - lam * (z - v);
  auto st = PdState::start(pt({x}), pt({v}), RngStream(0, 0));
  pd_step(st, scalar_bilinear(), lam, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(st.last_y[0], 1.0);
  EXPECT_DOUBLE_EQ(st.last_z[0], 0.4);
  EXPECT_DOUBLE_EQ(st.x_cur[0], x_next);
  EXPECT_DOUBLE_EQ(st.v_cur[0], v_next);
  EXPECT_DOUBLE_EQ(st.x_cur[0], 0.84);
}

TEST(PdStep, SaddlePointIsFixed) {
  const auto b = make_bilinear_saddle(6, 4, 3);
  auto st = PdState::start(b.reference, b.reference_dual, RngStream(0, 0));
  const double lam = b.saddle->reparametrized_step(0.05);
  pd_step(st, *b.saddle, lam, 0.0, 0.0);
  EXPECT_LT((st.x_cur - b.reference).norm(), 1e-12);
  EXPECT_LT((st.v_cur - b.reference_dual).norm(), 1e-12);
}

TEST(PdStep, RejectsInadmissibleStep) {
  const auto pb = scalar_bilinear();
  auto st = PdState::start(pt({1}), pt({0}), RngStream(0, 0));
  const double bound = pb.step_bound(0.1);
  EXPECT_NEAR(bound, 1.0 / std::sqrt(1.1), 1e-15);
  EXPECT_THROW(pd_step(st, pb, bound, 0.0, 0.0), ParameterError);
  EXPECT_NO_THROW(pd_step(st, pb, bound, 0.0, 0.0, PdStepOptions{0.1, true}));
  EXPECT_THROW(pd_step(st, pb, -0.1, 0.0, 0.0), ParameterError);
}

TEST(PdStep, InertiaFromPrimalDisplacementOnly) {
  const auto pb = scalar_bilinear(0.5);
  auto st = PdState::start(pt({0.2}), pt({0.0}), RngStream(0, 0));
  st.v_prev = pt({0.9});  // dual displacement is ignored
  pd_step(st, pb, 0.5, 0.1, 0.8);
  EXPECT_DOUBLE_EQ(st.last_alpha, 0.8);
}

TEST(Ergodic, Examples) {
  const auto pb = SaddleProblem::make(ProxFunction::zero(), ProxFunction::zero(), SmoothFunction::zero(1),
                                      SmoothFunction::zero(1), Matrix::Zero(1, 1), 1.0);
  auto st = PdState::start(pt({2}), pt({1}), RngStream(0, 0));
  EXPECT_THROW(ergodic_averages(st), StateError);
  for (int k = 0; k < 5; ++k) pd_step(st, pb, 0.3, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(ergodic_averages(st).first[0], 2.0);

  // Weighted mean of y = (0, 4) with weights (1, 3).
  PdState manual = PdState::start(pt({0}), pt({0}), RngStream(0, 0));
  manual.n = 2;
  manual.sum_lambda = 4.0;
  manual.sum_lambda_y = pt({1 * 0.0 + 3 * 4.0});
  manual.sum_lambda_z = pt({0});
  EXPECT_DOUBLE_EQ(ergodic_averages(manual).first[0], 3.0);
}

TEST(Ergodic, InsideHullOfIterates) {
  const auto b = make_bilinear_saddle(5, 4, 8);
  const auto pb = make_noisy_saddle(b, NoiseSpec{NoiseModel::gaussian_constant, 0.5, 0.0});
  auto st = PdState::start(Point::Ones(5), Point::Ones(4), RngStream(2, 2));
  Point lo = Point::Constant(5, std::numeric_limits<double>::infinity()), hi = -lo;
  for (int k = 0; k < 300; ++k) {
    const double lam = 0.45 / (1.0 + k % 3);
    pd_step(st, pb, lam, 0.1 / ((k + 1.0) * (k + 1.0)), 0.5);
    lo = lo.cwiseMin(st.last_y);
    hi = hi.cwiseMax(st.last_y);
  }
  const Point y = ergodic_averages(st).first;
  for (Index i = 0; i < 5; ++i) {
    EXPECT_GE(y[i], lo[i] - 1e-12);
    EXPECT_LE(y[i], hi[i] + 1e-12);
  }
}

TEST(Gap, Examples) {
  const auto zero = SaddleProblem::make(ProxFunction::zero(), ProxFunction::zero(), SmoothFunction::zero(2),
                                        SmoothFunction::zero(2), Matrix::Zero(2, 2), 0.0);
  EXPECT_EQ(*gap(zero, pt({3, 1}), pt({-2, 5})), 0.0);
  const auto pb = scalar_bilinear();
  EXPECT_EQ(*gap(pb, pt({2}), pt({0})), std::numeric_limits<double>::infinity());
  EXPECT_EQ(*gap(pb, pt({0}), pt({2})), -std::numeric_limits<double>::infinity());
  EXPECT_FALSE(gap(pb, pt({2}), pt({2})).has_value());
  EXPECT_DOUBLE_EQ(*gap(pb, pt({0.5}), pt({-0.5})), -0.25);
}

TEST(Gap, MatrixGameSaddleOrdering) {
  // Payoff [[2, -1], [-1, 1]]: mixed equilibrium by the 2x2 indifference formulas.
  Matrix P(2, 2);
  P << 2, -1, -1, 1;
  const double xs = (1.0 - (-1.0)) / (2.0 - (-1.0) + 1.0 - (-1.0));
  const Point x_star = pt({xs, 1 - xs});
  const Point v_star = x_star;  // symmetric payoff
  const auto pb = SaddleProblem::make(ProxFunction::simplex_indicator(), ProxFunction::simplex_indicator(),
                                      SmoothFunction::zero(2), SmoothFunction::zero(2), P.transpose());
  RngStream rng(3, 0);
  const double center = *gap(pb, x_star, v_star);
  for (int k = 0; k < 1000; ++k) {
    const double a = rng.uniform(), c = rng.uniform();
    const Point x = pt({a, 1 - a}), v = pt({c, 1 - c});
    EXPECT_LE(*gap(pb, x_star, v), center + 1e-12);
    EXPECT_GE(*gap(pb, x, v_star), center - 1e-12);
    EXPECT_GE(*gap(pb, x, v_star) - *gap(pb, x_star, v), -1e-12);
  }
}

TEST(Gap, BenchmarkSaddleOrdering) {
  const auto b = make_bilinear_saddle(10, 8, 1);
  const auto& pb = *b.saddle;
  RngStream rng(4, 0);
  const double center = *gap(pb, b.reference, b.reference_dual);
  for (int k = 0; k < 1000; ++k) {
    Point x(10), v(8);
    for (Index i = 0; i < 10; ++i) x[i] = 2 * rng.uniform() - 1;
    for (Index i = 0; i < 8; ++i) v[i] = 2 * rng.uniform() - 1;
    EXPECT_GE(center - *gap(pb, b.reference, v), -1e-9);
    EXPECT_GE(*gap(pb, x, b.reference_dual) - center, -1e-9);
  }
}

TEST(Certificate, ZeroNoiseClosedForm) {
  const auto pb = scalar_bilinear();
  auto st = PdState::start(pt({1}), pt({0.5}), RngStream(0, 0));
  for (int k = 0; k < 10; ++k) pd_step(st, pb, 0.6, 0.0, 0.0);
  const auto c = gap_certificate(st, pt({0}), pt({0}), 0.1);
  EXPECT_EQ(c.N, 9u);
  EXPECT_EQ(c.S, 0.0);
  EXPECT_EQ(c.T, 1.0);
  EXPECT_EQ(c.C, 0.0);
  EXPECT_NEAR(c.bound, 1.25 / (2 * 6.0), 1e-15);
  const auto [y, z] = ergodic_averages(st);
  EXPECT_LE(*gap_difference(pb, y, z, pt({0}), pt({0})), c.bound);
}

TEST(Certificate, ConstantStepDecaysLikeInverseN) {
  const auto pb = scalar_bilinear();
  auto st = PdState::start(pt({1}), pt({1}), RngStream(0, 0));
  std::vector<double> bounds;
  for (int k = 0; k < 1000; ++k) {
    pd_step(st, pb, 0.5, 0.0, 0.0);
    if (k == 99 || k == 999) bounds.push_back(gap_certificate(st, pt({0}), pt({0}), 0.1).bound);
  }
  EXPECT_NEAR(bounds[0] / bounds[1], 10.0, 1e-12);
}

TEST(Certificate, AccumulatesVarianceAndEps) {
  const auto b = make_bilinear_saddle(3, 2, 5);
  const auto pb = make_noisy_saddle(b, NoiseSpec{NoiseModel::gaussian_constant, 0.5, 0.0});
  auto st = PdState::start(Point::Zero(3), Point::Zero(2), RngStream(1, 1));
  const double lam = 0.3;
  double S = 0, T = 1;
  for (int k = 0; k < 4; ++k) {
    const double e = 0.1 / ((k + 1.0) * (k + 1.0));
    pd_step(st, pb, lam, e, 0.5);
    S += e;
    T *= 1 + e;
  }
  const auto c = gap_certificate(st, Point::Zero(3), Point::Zero(2), 0.1);
  EXPECT_DOUBLE_EQ(c.S, S);
  EXPECT_DOUBLE_EQ(c.T, T);
  // Per step: lambda^2 (3 + 2) 0.25 for s and the same for r.
  const double per = lam * lam * 5 * 0.25;
  EXPECT_NEAR(c.C, 4 * per + (1 + 1 / 0.1) * 4 * per, 1e-12);
  st.tracks_variance = false;
  EXPECT_THROW(gap_certificate(st, Point::Zero(3), Point::Zero(2), 0.1), CapabilityError);
  EXPECT_NO_THROW(gap_certificate(st, Point::Zero(3), Point::Zero(2), 0.1, 2.0));
}

TEST(PowerIteration, Examples) {
  EXPECT_NEAR(power_iteration_norm(Matrix::Identity(3, 3), 50, 1).estimate, 1.0, 1e-9);
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 1, 5;
  EXPECT_NEAR(power_iteration_norm(D, 50, 1).estimate, 5.0, 1e-6);
  EXPECT_EQ(power_iteration_norm(Matrix::Zero(3, 3), 10, 1).estimate, 0.0);
  EXPECT_THROW(power_iteration_norm(D, 9, 1), ParameterError);
  RngStream rng(6, 0);
  const Matrix K = test::random_matrix(rng, 20, 30);
  const auto pn = power_iteration_norm(K, 500, 2);
  const double svd = Eigen::JacobiSVD<Matrix>(K).singularValues()(0);
  EXPECT_NEAR(pn.estimate, svd, 1e-6);
  EXPECT_GE(pn.bound(), svd);
}

TEST(Problem, DeclaredNormChecked) {
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 1, 5;
  EXPECT_THROW(SaddleProblem::make(ProxFunction::zero(), ProxFunction::zero(), SmoothFunction::zero(2),
                                   SmoothFunction::zero(2), D, 4.0),
               ParameterError);
  const auto pb = SaddleProblem::make(ProxFunction::zero(), ProxFunction::zero(), SmoothFunction::half_squared_norm(2),
                                      SmoothFunction::zero(2), D, power_iteration_norm(D, 50, 0).bound());
  EXPECT_DOUBLE_EQ(pb.mu(), 1.0);
  EXPECT_NEAR(pb.reparametrized_step(0.05), 0.95 / (1 + 5.05), 1e-12);
}

TEST(Reduction, ZeroNoiseSeedIndependent) {
  const auto b = make_bilinear_saddle(6, 5, 2);
  const auto pb = make_noisy_saddle(b, NoiseSpec{NoiseModel::gaussian_constant, 0.0, 0.0});
  auto a = PdState::start(Point::Ones(6), Point::Ones(5), RngStream(1, 1));
  auto c = PdState::start(Point::Ones(6), Point::Ones(5), RngStream(77, 3));
  const double lam = pb.reparametrized_step(0.05);
  for (int k = 0; k < 200; ++k) {
    pd_step(a, pb, lam, 0.0, 0.0);
    pd_step(c, pb, lam, 0.0, 0.0);
    ASSERT_EQ(a.x_cur, c.x_cur);
    ASSERT_EQ(a.v_cur, c.v_cur);
  }
}

}  // namespace
}  // namespace sfbf
