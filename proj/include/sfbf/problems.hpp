// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfbf/operators.hpp"
#include "sfbf/oracles.hpp"
#include "sfbf/saddle.hpp"

namespace sfbf {

/// 0 in A x + B x, with optional structure used by the stochastic oracles.
struct InclusionProblem {
  MonotoneMap A;
  LipOperator B;
  /// Components whose mean is B (lasso rows); empty if B has no natural split.
  std::vector<LipOperator> components;
  /// Set when A is the subdifferential of f (composite minimization).
  std::optional<ProxFunction> f;
};

/// A reproducible instance with a stored reference solution.
///
/// kind is one of "affine_box", "lasso", "bilinear_saddle". data holds the
/// instance matrices as JSON, so a benchmark round-trips byte-for-byte.
struct Benchmark {
  std::string name;
  std::string kind;
  std::uint64_t seed = 0;
  nlohmann::json params;
  nlohmann::json data;

  std::optional<InclusionProblem> inclusion;
  std::optional<SaddleProblem> saddle;

  Point reference;       // x* (primal for saddle problems)
  Point reference_dual;  // v* for saddle problems, empty otherwise
  std::string provenance;
  double residual = 0.0;

  bool is_saddle() const { return saddle.has_value(); }
  Index dimension() const { return reference.size(); }
};

inline constexpr double kReferenceTolerance = 1e-9;

/// dist(-Bx, Ax) for box normal cones and l1 subdifferentials (exact);
/// ||x - J_A(x - Bx)|| for the other catalog entries.
double inclusion_residual(const MonotoneMap& A, const LipOperator& B, const Point& x);

/// Natural residual of the saddle optimality system at (x, v).
double saddle_residual(const SaddleProblem& problem, const Point& x, const Point& v);

/// Affine operator Mx + q with A the normal cone of [lower, upper].
Benchmark make_affine_box(std::string name, Matrix M, Point q, Point lower, Point upper, double lipschitz,
                          double strong_mod, std::uint64_t seed = 0, nlohmann::json params = nlohmann::json::object());

/// B = (mu I + G) x + q, G random skew with ||G|| = min(L/2, sqrt(L^2 - mu^2)),
/// A = normal cone of [-1, 1]^d, q = -M x_u with x_u uniform in [-1.5, 1.5]^d.
Benchmark make_strongly_monotone_affine(Index d, double mu, double L, std::uint64_t seed);

/// B = G x + q with G skew, invertible, spectrum {+-i omega_k}, omega_k in
/// [L/2, L]; A = normal cone of [-1, 1]^d; q = -G x_t with x_t interior, so
/// the solution is unique. d must be even.
Benchmark make_monotone_skew(Index d, double L, std::uint64_t seed);

/// min tau ||x||_1 + (1/m) sum_i 1/2 (a_i^T x - b_i)^2 on random data.
Benchmark make_lasso(Index m, Index d, double tau, std::uint64_t seed);
/// The same on given data.
Benchmark make_lasso(std::string name, Matrix data, Point targets, double tau, std::uint64_t seed = 0,
                     nlohmann::json params = nlohmann::json::object());

/// h = 1/2||x||^2, l = 1/2||v||^2, f and g* indicators of [-1, 1] boxes,
/// K a d_dual x d_primal Gaussian matrix scaled by 1/sqrt(d_primal).
Benchmark make_bilinear_saddle(Index d_primal, Index d_dual, std::uint64_t seed);
Benchmark make_bilinear_saddle(std::string name, Matrix K, std::uint64_t seed = 0,
                               nlohmann::json params = nlohmann::json::object());

/// Runs a generator by name: {"generator": "strongly_monotone_affine", "d": .., "mu": .., "L": .., "seed": ..}
/// and similarly for "monotone_skew", "lasso", "bilinear_saddle".
Benchmark generate_benchmark(const nlohmann::json& spec);

nlohmann::json to_json(const Benchmark& bench);
/// Rebuilds the instance and re-checks the stored reference (<= 1e-9).
Benchmark benchmark_from_json(const nlohmann::json& j);

/// Stochastic oracle for an inclusion benchmark. finite_sum uses the stored
/// components when present, otherwise the two atoms B +- sigma0 (1,...,1)/sqrt(d).
StochasticOracle make_oracle(const Benchmark& bench, const NoiseSpec& noise);

/// The saddle problem with gradient oracles of h and l replaced per noise.
SaddleProblem make_noisy_saddle(const Benchmark& bench, const NoiseSpec& noise);

}  // namespace sfbf
