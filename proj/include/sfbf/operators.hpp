// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace sfbf {

/// A point of the finite-dimensional Hilbert space R^d.
using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Throws InvalidInput if any coordinate is NaN or infinite.
void require_finite(const Point& x, std::string_view what);

/// Throws ParameterError unless lambda is a finite positive number.
void require_positive_step(double lambda);

// ---------------------------------------------------------------------------
// Maximal monotone operators, exposed only through their resolvents.
// ---------------------------------------------------------------------------

struct ZeroOperator {};

/// x -> M x + q with M + M^T positive semidefinite.
struct AffineOperator {
  Matrix M;
  Point q;
};

/// Normal cone of the box [lower, upper]; bounds may be infinite.
struct BoxNormalCone {
  Point lower;
  Point upper;
};

/// Subdifferential of tau * ||.||_1.
struct L1Subdifferential {
  double tau = 0.0;
};

/// Gradient of 1/2 x^T Q x + c^T x with Q symmetric PSD. An empty Q means
/// the isotropic case Q = weight * I; an empty c means c = 0.
struct QuadraticSubdifferential {
  double weight = 0.0;
  Matrix Q;
  Point c;
};

class MonotoneMap {
 public:
  using Descriptor = std::variant<ZeroOperator, AffineOperator, BoxNormalCone,
                                  L1Subdifferential, QuadraticSubdifferential>;

  static MonotoneMap zero();
  static MonotoneMap affine(Matrix M, Point q);
  static MonotoneMap box_normal_cone(Point lower, Point upper);
  static MonotoneMap box_normal_cone(Index dim, double lower, double upper);
  static MonotoneMap l1(double tau);
  static MonotoneMap quadratic(Matrix Q, Point c);
  static MonotoneMap isotropic_quadratic(double weight);

  /// (Id + lambda A)^{-1} x.
  Point resolvent(double lambda, const Point& x) const;

  const Descriptor& descriptor() const { return descriptor_; }
  std::string_view kind() const;

  /// Dimension the operator is bound to, if any (zero and l1 are not bound).
  std::optional<Index> dimension() const;

 private:
  explicit MonotoneMap(Descriptor d) : descriptor_(std::move(d)) {}
  Descriptor descriptor_;
};

Point resolve(const MonotoneMap& A, double lambda, const Point& x);

// ---------------------------------------------------------------------------
// Single-valued Lipschitz monotone operators.
// ---------------------------------------------------------------------------

class LipOperator {
 public:
  using Fn = std::function<Point(const Point&)>;

  /// A general operator with declared Lipschitz constant and strong
  /// monotonicity modulus (0 means merely monotone).
  LipOperator(Index dim, Fn eval, double lipschitz, double strong_mod = 0.0);

  /// Affine operator with L = ||M||_2 and mu = lambda_min((M + M^T)/2)^+.
  static LipOperator affine(Matrix M, Point q);
  /// Affine operator with declared constants (checked only for sign).
  static LipOperator affine(Matrix M, Point q, double lipschitz, double strong_mod);
  static LipOperator identity(Index dim);

  Point operator()(const Point& x) const;

  Index dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  double strong_mod() const { return strong_mod_; }
  /// Set for operators built through affine(); used for exact serialization.
  const std::optional<AffineOperator>& affine_form() const { return affine_; }

 private:
  Index dim_;
  Fn eval_;
  double lipschitz_;
  double strong_mod_;
  std::optional<AffineOperator> affine_;
};

// ---------------------------------------------------------------------------
// Proper lsc convex functions with closed-form proximity operators.
// ---------------------------------------------------------------------------

struct ZeroFunction {};

/// Indicator of the box [lower, upper].
struct BoxIndicator {
  Point lower;
  Point upper;
};

/// Indicator of the probability simplex {x >= 0, sum x = 1}.
struct SimplexIndicator {};

struct L1Norm {
  double tau = 0.0;
};

/// weight/2 * ||x||^2.
struct HalfSquaredNorm {
  double weight = 1.0;
};

class ProxFunction {
 public:
  using Descriptor = std::variant<ZeroFunction, BoxIndicator, SimplexIndicator,
                                  L1Norm, HalfSquaredNorm>;

  static ProxFunction zero();
  static ProxFunction box_indicator(Point lower, Point upper);
  static ProxFunction box_indicator(Index dim, double lower, double upper);
  static ProxFunction simplex_indicator();
  static ProxFunction l1(double tau);
  static ProxFunction half_squared_norm(double weight);

  /// argmin_y f(y) + ||x - y||^2 / (2 lambda).
  Point prox(double lambda, const Point& x) const;

  /// f(x), +infinity outside the domain. Indicators accept points within a
  /// relative 1e-12 of their set, so convex combinations of feasible points
  /// stay feasible under rounding.
  double value(const Point& x) const;

  /// The subdifferential as a catalog monotone map, when one exists
  /// (the simplex indicator has none).
  std::optional<MonotoneMap> subdifferential() const;

  const Descriptor& descriptor() const { return descriptor_; }
  std::string_view kind() const;

 private:
  explicit ProxFunction(Descriptor d) : descriptor_(std::move(d)) {}
  Descriptor descriptor_;
};

Point prox(const ProxFunction& f, double lambda, const Point& x);

/// prox of lambda f^* via the Moreau decomposition x - lambda prox_{f/lambda}(x/lambda).
Point conjugate_prox(const ProxFunction& f, double lambda, const Point& x);

/// Euclidean projection onto the probability simplex.
Point project_simplex(const Point& x);

/// Largest ||Bx - By|| / ||x - y|| over sample_count random pairs drawn
/// uniformly from the cube [-radius, radius]^d.
double estimate_lipschitz(const LipOperator& B, std::size_t sample_count, double radius,
                          std::uint64_t seed);

/// Spectral norm via a dense SVD.
double spectral_norm(const Matrix& M);

// ---------------------------------------------------------------------------
// JSON descriptors. Matrices are arrays of rows; infinite box bounds are null.
// ---------------------------------------------------------------------------

Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& M);
Point point_from_json(const nlohmann::json& j);
nlohmann::json point_to_json(const Point& x);

MonotoneMap monotone_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MonotoneMap& A);
ProxFunction prox_function_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProxFunction& f);

}  // namespace sfbf
