// SPDX-License-Identifier: Apache-2.0
#include "sfbf/saddle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sfbf/errors.hpp"

namespace sfbf {

SmoothFunction SmoothFunction::quadratic(Matrix Q, Point c) {
  if (Q.rows() != Q.cols() || Q.rows() != c.size()) throw InvalidInput("quadratic: Q must be d x d, c of size d");
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm())) throw ParameterError("quadratic: Q must be symmetric");
  const Matrix Qc = Q;
  const Point cc = c;
  SmoothFunction fn{[Qc, cc](const Point& x) { return 0.5 * x.dot(Qc * x) + cc.dot(x); },
                    StochasticOracle::exact(LipOperator::affine(std::move(Q), std::move(c)))};
  return fn;
}

SmoothFunction SmoothFunction::half_squared_norm(Index dim, double weight) {
  if (!(weight >= 0.0)) throw ParameterError("half_squared_norm: weight must be >= 0");
  return quadratic(weight * Matrix::Identity(dim, dim), Point::Zero(dim));
}

SmoothFunction SmoothFunction::zero(Index dim) {
  SmoothFunction fn{[](const Point&) { return 0.0; },
                    StochasticOracle::exact(LipOperator::affine(Matrix::Zero(dim, dim), Point::Zero(dim)))};
  return fn;
}

SmoothFunction SmoothFunction::with_gradient(StochasticOracle oracle) const {
  if (oracle.base().dim() != dim()) throw InvalidInput("with_gradient: dimension mismatch");
  return SmoothFunction{value, std::move(oracle)};
}

SaddleProblem SaddleProblem::make(ProxFunction f, ProxFunction g_star, SmoothFunction h, SmoothFunction ell,
                                  Matrix K, std::optional<double> K_norm) {
  if (K.size() == 0) throw InvalidInput("saddle problem: K must be nonempty");
  if (h.dim() != K.cols()) throw InvalidInput("saddle problem: h dimension must equal K columns");
  if (ell.dim() != K.rows()) throw InvalidInput("saddle problem: l dimension must equal K rows");
  if (!K.allFinite()) throw InvalidInput("saddle problem: K has non-finite entries");
  const double exact = spectral_norm(K);
  const double declared = K_norm.value_or(exact);
  if (declared < exact * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "saddle problem: declared ||K|| = " << declared << " below spectral norm " << exact;
    throw ParameterError(msg.str());
  }
  return SaddleProblem{std::move(f), std::move(g_star), std::move(h), std::move(ell), std::move(K), declared};
}

double SaddleProblem::mu() const { return std::max(h.lipschitz(), ell.lipschitz()); }

double SaddleProblem::step_bound(double eps) const {
  if (!(eps > 0.0)) throw ParameterError("step bound: eps must be positive");
  const double denom = std::sqrt(1.0 + eps) * (mu() + K_norm);
  return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
}

double SaddleProblem::reparametrized_step(double eps_prime) const {
  if (!(eps_prime > 0.0 && eps_prime < 1.0)) throw ParameterError("eps' must be in (0, 1)");
  const double denom = mu() + K_norm;
  if (!(denom > 0.0)) throw ParameterError("reparametrized step undefined when mu + ||K|| = 0");
  return (1.0 - eps_prime) / denom;
}

PdState PdState::start(Point x0, Point v0, RngStream rng) {
  require_finite(x0, "initial primal point");
  require_finite(v0, "initial dual point");
  PdState s;
  s.x_prev = x0;
  s.x_cur = x0;
  s.v_prev = v0;
  s.v_cur = v0;
  s.sum_lambda_y = Point::Zero(x0.size());
  s.sum_lambda_z = Point::Zero(v0.size());
  s.x0 = std::move(x0);
  s.v0 = std::move(v0);
  s.rng = std::move(rng);
  return s;
}

void pd_step(PdState& st, const SaddleProblem& pb, double lambda, double eps_n, double theta,
             const PdStepOptions& options) {
  require_positive_step(lambda);
  if (st.x_cur.size() != pb.primal_dim() || st.v_cur.size() != pb.dual_dim()) {
    throw InvalidInput("pd_step: state dimensions do not match K");
  }
  if (!options.override_conditions) {
    const double bound = pb.step_bound(options.step_eps);
    if (!(lambda < bound)) {
      std::ostringstream msg;
      msg << "pd_step: step " << lambda << " outside ]0, " << bound << "[";
      throw ParameterError(msg.str());
    }
  }
  const std::uint64_t n = st.n;
  const double alpha = inertia_coefficient(st.x_cur, st.x_prev, eps_n, theta);
  const Point w = st.x_cur + alpha * (st.x_cur - st.x_prev);
  const Point u = st.v_cur + alpha * (st.v_cur - st.v_prev);

  st.rng.seek(n, channel::r_primal);
  const Point gh_w = pb.h.grad.draw_r(w, n, st.rng);
  st.rng.seek(n, channel::r_dual);
  const Point gl_u = pb.ell.grad.draw_r(u, n, st.rng);

  const Point y = pb.f.prox(lambda, w - lambda * gh_w - lambda * (pb.K.transpose() * u));
  const Point z = pb.g_star.prox(lambda, u - lambda * gl_u + lambda * (pb.K * w));

  st.rng.seek(n, channel::s_primal);
  const Point gh_y = pb.h.grad.draw_s(y, n, st.rng);
  st.rng.seek(n, channel::s_dual);
  const Point gl_z = pb.ell.grad.draw_s(z, n, st.rng);

  Point v_next = z - lambda * (gl_z - gl_u) + lambda * (pb.K * (y - w));
  Point x_next = y - lambda * (gh_y - gh_w) - lambda * (pb.K.transpose() * (z - u));
  const double size = std::sqrt(x_next.squaredNorm() + v_next.squaredNorm());
  if (!x_next.allFinite() || !v_next.allFinite() || size > 1e12) {
    throw DivergenceError("primal-dual iterate diverged at n = " + std::to_string(n + 1));
  }

  const double l2 = lambda * lambda;
  st.c_s += l2 * (pb.h.grad.conditional_variance(y, n) + pb.ell.grad.conditional_variance(z, n));
  st.c_r += l2 * (pb.h.grad.conditional_variance(w, n) + pb.h.grad.r_bias_squared(n) +
                  pb.ell.grad.conditional_variance(u, n) + pb.ell.grad.r_bias_squared(n));
  st.sum_lambda += lambda;
  st.sum_lambda_y += lambda * y;
  st.sum_lambda_z += lambda * z;
  st.S += eps_n;
  st.T *= 1.0 + eps_n;

  st.last_alpha = alpha;
  st.last_y = y;
  st.last_z = z;
  st.x_prev = std::move(st.x_cur);
  st.x_cur = std::move(x_next);
  st.v_prev = std::move(st.v_cur);
  st.v_cur = std::move(v_next);
  ++st.n;
}

std::pair<Point, Point> ergodic_averages(const PdState& state) {
  if (state.n == 0 || !(state.sum_lambda > 0.0)) throw StateError("ergodic averages need at least one step");
  return {state.sum_lambda_y / state.sum_lambda, state.sum_lambda_z / state.sum_lambda};
}

std::optional<double> gap(const SaddleProblem& pb, const Point& x, const Point& v) {
  if (x.size() != pb.primal_dim() || v.size() != pb.dual_dim()) throw InvalidInput("gap: dimension mismatch");
  const double fx = pb.f.value(x);
  const double gv = pb.g_star.value(v);
  const bool f_inf = std::isinf(fx);
  const bool g_inf = std::isinf(gv);
  if (f_inf && g_inf) return std::nullopt;
  if (f_inf) return std::numeric_limits<double>::infinity();
  if (g_inf) return -std::numeric_limits<double>::infinity();
  return pb.h.value(x) + fx + (pb.K * x).dot(v) - gv - pb.ell.value(v);
}

std::optional<double> gap_difference(const SaddleProblem& pb, const Point& y_hat, const Point& z_hat,
                                     const Point& x, const Point& v) {
  const auto first = gap(pb, y_hat, v);
  const auto second = gap(pb, x, z_hat);
  if (!first || !second) return std::nullopt;
  if (std::isinf(*first) && std::isinf(*second) && (*first > 0) == (*second > 0)) return std::nullopt;
  return *first - *second;
}

GapCertificate gap_certificate(const PdState& state, const Point& x, const Point& v, double step_eps,
                               std::optional<double> C) {
  if (state.n == 0) throw StateError("certificate needs at least one step");
  if (!(step_eps > 0.0)) throw ParameterError("certificate: eps must be positive");
  if (!C && !state.tracks_variance) throw CapabilityError("certificate: no variance data for C");
  if (x.size() != state.x0.size() || v.size() != state.v0.size()) throw InvalidInput("certificate: dimension mismatch");
  GapCertificate cert;
  cert.N = state.n - 1;
  cert.S = state.S;
  cert.T = state.T;
  cert.C = C.value_or(state.c_s + (1.0 + 1.0 / step_eps) * state.c_r);
  cert.sum_lambda = state.sum_lambda;
  const double dist2 = (state.x0 - x).squaredNorm() + (state.v0 - v).squaredNorm();
  cert.bound = 0.5 * (1.0 + cert.S * cert.T) * (dist2 + cert.C) / cert.sum_lambda;
  return cert;
}

PowerNorm power_iteration_norm(const Matrix& K, std::size_t iterations, std::uint64_t seed) {
  if (iterations < 10) throw ParameterError("power iteration: need at least 10 iterations");
  if (!K.allFinite()) throw InvalidInput("power iteration: K has non-finite entries");
  PowerNorm out;
  if (K.size() == 0 || K.cwiseAbs().maxCoeff() == 0.0) return out;
  RngStream rng(seed, 0x504f574552ULL);
  Point v(K.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  for (std::size_t it = 0; it < iterations; ++it) {
    Point next = K.transpose() * (K * v);
    const double norm = next.norm();
    if (norm == 0.0) {
      // Start vector in the null space; restart from a fresh draw.
      for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
      v.normalize();
      continue;
    }
    v = next / norm;
  }
  out.estimate = (K * v).norm();
  return out;
}

}  // namespace sfbf
