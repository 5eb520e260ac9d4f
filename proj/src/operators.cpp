// SPDX-License-Identifier: Apache-2.0
#include "sfbf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sfbf/errors.hpp"
#include "sfbf/rng.hpp"

namespace sfbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasibilityTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_same_dim(Index expected, const Point& x, std::string_view what) {
  if (x.size() != expected) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (expected " +
                       std::to_string(expected) + ", got " + std::to_string(x.size()) + ")");
  }
}

void check_box(const Point& lower, const Point& upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw InvalidInput("box: lower and upper must be non-empty and of equal size");
  }
  for (Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i] ||
        lower[i] == kInf || upper[i] == -kInf) {
      throw InvalidInput("box: need lower <= upper with lower < +inf and upper > -inf");
    }
  }
}

Point clamp(const Point& x, const Point& lower, const Point& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

Point soft_threshold(const Point& x, double threshold) {
  Point y(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double magnitude = std::abs(x[i]) - threshold;
    y[i] = magnitude > 0.0 ? std::copysign(magnitude, x[i]) : 0.0;
  }
  return y;
}

void check_matrix_finite(const Matrix& M, std::string_view what) {
  if (!M.allFinite()) throw InvalidInput(std::string(what) + ": non-finite matrix entry");
}

void check_monotone_matrix(const Matrix& M, std::string_view what) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw InvalidInput(std::string(what) + ": matrix must be square and non-empty");
  }
  check_matrix_finite(M, what);
  const Matrix sym = 0.5 * (M + M.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  const double scale = std::max(1.0, M.norm());
  if (min_eig < -1e-10 * scale) {
    throw ParameterError(std::string(what) + ": matrix is not monotone (M + M^T not PSD)");
  }
}

bool within_box(const Point& x, const Point& lower, const Point& upper) {
  for (Index i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) return false;
    if (x[i] < lower[i] - kFeasibilityTol * (1.0 + std::abs(lower[i]))) return false;
    if (x[i] > upper[i] + kFeasibilityTol * (1.0 + std::abs(upper[i]))) return false;
  }
  return true;
}

double bound_from_json(const nlohmann::json& j, double infinite_value) {
  return j.is_null() ? infinite_value : j.get<double>();
}

nlohmann::json bound_to_json(double v) {
  return std::isinf(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

}  // namespace

void require_finite(const Point& x, std::string_view what) {
  if (!x.allFinite()) throw InvalidInput(std::string(what) + ": non-finite coordinate");
}

void require_positive_step(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("step size must be finite and positive, got " + std::to_string(lambda));
  }
}

// ---------------------------------------------------------------------------
// MonotoneMap
// ---------------------------------------------------------------------------

MonotoneMap MonotoneMap::zero() { return MonotoneMap(ZeroOperator{}); }

MonotoneMap MonotoneMap::affine(Matrix M, Point q) {
  check_monotone_matrix(M, "affine operator");
  require_same_dim(M.rows(), q, "affine operator offset");
  require_finite(q, "affine operator offset");
  return MonotoneMap(AffineOperator{std::move(M), std::move(q)});
}

MonotoneMap MonotoneMap::box_normal_cone(Point lower, Point upper) {
  check_box(lower, upper);
  return MonotoneMap(BoxNormalCone{std::move(lower), std::move(upper)});
}

MonotoneMap MonotoneMap::box_normal_cone(Index dim, double lower, double upper) {
  return box_normal_cone(Point::Constant(dim, lower), Point::Constant(dim, upper));
}

MonotoneMap MonotoneMap::l1(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ParameterError("l1: tau must be >= 0");
  return MonotoneMap(L1Subdifferential{tau});
}

MonotoneMap MonotoneMap::quadratic(Matrix Q, Point c) {
  check_monotone_matrix(Q, "quadratic");
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm())) {
    throw ParameterError("quadratic: Q must be symmetric");
  }
  if (c.size() != 0) {
    require_same_dim(Q.rows(), c, "quadratic linear term");
    require_finite(c, "quadratic linear term");
  }
  return MonotoneMap(QuadraticSubdifferential{0.0, std::move(Q), std::move(c)});
}

MonotoneMap MonotoneMap::isotropic_quadratic(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ParameterError("quadratic: weight must be >= 0");
  }
  return MonotoneMap(QuadraticSubdifferential{weight, Matrix(), Point()});
}

Point MonotoneMap::resolvent(double lambda, const Point& x) const {
  require_positive_step(lambda);
  require_finite(x, "resolvent argument");
  return std::visit(
      Overloaded{
          [&](const ZeroOperator&) -> Point { return x; },
          [&](const AffineOperator& a) -> Point {
            require_same_dim(a.M.rows(), x, "resolvent argument");
            const Matrix system = Matrix::Identity(a.M.rows(), a.M.cols()) + lambda * a.M;
            return system.partialPivLu().solve(x - lambda * a.q);
          },
          [&](const BoxNormalCone& b) -> Point {
            require_same_dim(b.lower.size(), x, "resolvent argument");
            return clamp(x, b.lower, b.upper);
          },
          [&](const L1Subdifferential& l) -> Point { return soft_threshold(x, lambda * l.tau); },
          [&](const QuadraticSubdifferential& q) -> Point {
            Point rhs = x;
            if (q.c.size() != 0) {
              require_same_dim(q.c.size(), x, "resolvent argument");
              rhs -= lambda * q.c;
            }
            if (q.Q.size() == 0) return rhs / (1.0 + lambda * q.weight);
            require_same_dim(q.Q.rows(), x, "resolvent argument");
            const Matrix system = Matrix::Identity(q.Q.rows(), q.Q.cols()) + lambda * q.Q;
            return system.llt().solve(rhs);
          },
      },
      descriptor_);
}

std::string_view MonotoneMap::kind() const {
  return std::visit(Overloaded{
                        [](const ZeroOperator&) { return std::string_view("zero"); },
                        [](const AffineOperator&) { return std::string_view("affine"); },
                        [](const BoxNormalCone&) { return std::string_view("box_normal_cone"); },
                        [](const L1Subdifferential&) { return std::string_view("l1"); },
                        [](const QuadraticSubdifferential&) {
                          return std::string_view("quadratic");
                        },
                    },
                    descriptor_);
}

std::optional<Index> MonotoneMap::dimension() const {
  return std::visit(Overloaded{
                        [](const ZeroOperator&) -> std::optional<Index> { return std::nullopt; },
                        [](const AffineOperator& a) -> std::optional<Index> { return a.M.rows(); },
                        [](const BoxNormalCone& b) -> std::optional<Index> {
                          return b.lower.size();
                        },
                        [](const L1Subdifferential&) -> std::optional<Index> {
                          return std::nullopt;
                        },
                        [](const QuadraticSubdifferential& q) -> std::optional<Index> {
                          if (q.Q.size() != 0) return q.Q.rows();
                          if (q.c.size() != 0) return q.c.size();
                          return std::nullopt;
                        },
                    },
                    descriptor_);
}

Point resolve(const MonotoneMap& A, double lambda, const Point& x) {
  return A.resolvent(lambda, x);
}

// ---------------------------------------------------------------------------
// LipOperator
// ---------------------------------------------------------------------------

LipOperator::LipOperator(Index dim, Fn eval, double lipschitz, double strong_mod)
    : dim_(dim), eval_(std::move(eval)), lipschitz_(lipschitz), strong_mod_(strong_mod) {
  if (dim_ <= 0) throw InvalidInput("LipOperator: dimension must be positive");
  if (!eval_) throw InvalidInput("LipOperator: empty evaluation function");
  if (!(lipschitz_ > 0.0) || !std::isfinite(lipschitz_)) {
    throw ParameterError("LipOperator: Lipschitz constant must be finite and positive");
  }
  if (!(strong_mod_ >= 0.0) || strong_mod_ > lipschitz_) {
    throw ParameterError("LipOperator: need 0 <= strong_mod <= lipschitz");
  }
}

LipOperator LipOperator::affine(Matrix M, Point q) {
  check_monotone_matrix(M, "LipOperator::affine");
  const double L = std::max(spectral_norm(M), std::numeric_limits<double>::min());
  const Matrix sym = 0.5 * (M + M.transpose());
  const double mu = std::clamp(
      Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff(),
      0.0, L);
  return affine(std::move(M), std::move(q), L, mu);
}

LipOperator LipOperator::affine(Matrix M, Point q, double lipschitz, double strong_mod) {
  check_matrix_finite(M, "LipOperator::affine");
  if (M.rows() != M.cols()) throw InvalidInput("LipOperator::affine: M must be square");
  require_same_dim(M.rows(), q, "LipOperator::affine offset");
  require_finite(q, "LipOperator::affine offset");
  const Index d = M.rows();
  LipOperator op(
      d, [M, q](const Point& x) -> Point { return M * x + q; }, lipschitz, strong_mod);
  op.affine_ = AffineOperator{std::move(M), std::move(q)};
  return op;
}

LipOperator LipOperator::identity(Index dim) {
  return affine(Matrix::Identity(dim, dim), Point::Zero(dim), 1.0, 1.0);
}

Point LipOperator::operator()(const Point& x) const {
  require_same_dim(dim_, x, "LipOperator argument");
  return eval_(x);
}

// ---------------------------------------------------------------------------
// ProxFunction
// ---------------------------------------------------------------------------

ProxFunction ProxFunction::zero() { return ProxFunction(ZeroFunction{}); }

ProxFunction ProxFunction::box_indicator(Point lower, Point upper) {
  check_box(lower, upper);
  return ProxFunction(BoxIndicator{std::move(lower), std::move(upper)});
}

ProxFunction ProxFunction::box_indicator(Index dim, double lower, double upper) {
  return box_indicator(Point::Constant(dim, lower), Point::Constant(dim, upper));
}

ProxFunction ProxFunction::simplex_indicator() { return ProxFunction(SimplexIndicator{}); }

ProxFunction ProxFunction::l1(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ParameterError("l1: tau must be >= 0");
  return ProxFunction(L1Norm{tau});
}

ProxFunction ProxFunction::half_squared_norm(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ParameterError("half_squared_norm: weight must be >= 0");
  }
  return ProxFunction(HalfSquaredNorm{weight});
}

Point ProxFunction::prox(double lambda, const Point& x) const {
  require_positive_step(lambda);
  require_finite(x, "prox argument");
  return std::visit(Overloaded{
                        [&](const ZeroFunction&) -> Point { return x; },
                        [&](const BoxIndicator& b) -> Point {
                          require_same_dim(b.lower.size(), x, "prox argument");
                          return clamp(x, b.lower, b.upper);
                        },
                        [&](const SimplexIndicator&) -> Point { return project_simplex(x); },
                        [&](const L1Norm& l) -> Point { return soft_threshold(x, lambda * l.tau); },
                        [&](const HalfSquaredNorm& h) -> Point {
                          return x / (1.0 + lambda * h.weight);
                        },
                    },
                    descriptor_);
}

double ProxFunction::value(const Point& x) const {
  return std::visit(Overloaded{
                        [&](const ZeroFunction&) { return 0.0; },
                        [&](const BoxIndicator& b) {
                          require_same_dim(b.lower.size(), x, "indicator argument");
                          return within_box(x, b.lower, b.upper) ? 0.0 : kInf;
                        },
                        [&](const SimplexIndicator&) {
                          const double tol = kFeasibilityTol * (1.0 + x.cwiseAbs().sum());
                          const bool ok = x.size() > 0 && x.minCoeff() >= -tol &&
                                          std::abs(x.sum() - 1.0) <= tol;
                          return ok ? 0.0 : kInf;
                        },
                        [&](const L1Norm& l) { return l.tau * x.lpNorm<1>(); },
                        [&](const HalfSquaredNorm& h) { return 0.5 * h.weight * x.squaredNorm(); },
                    },
                    descriptor_);
}

std::optional<MonotoneMap> ProxFunction::subdifferential() const {
  return std::visit(
      Overloaded{
          [](const ZeroFunction&) -> std::optional<MonotoneMap> { return MonotoneMap::zero(); },
          [](const BoxIndicator& b) -> std::optional<MonotoneMap> {
            return MonotoneMap::box_normal_cone(b.lower, b.upper);
          },
          [](const SimplexIndicator&) -> std::optional<MonotoneMap> { return std::nullopt; },
          [](const L1Norm& l) -> std::optional<MonotoneMap> { return MonotoneMap::l1(l.tau); },
          [](const HalfSquaredNorm& h) -> std::optional<MonotoneMap> {
            return MonotoneMap::isotropic_quadratic(h.weight);
          },
      },
      descriptor_);
}

std::string_view ProxFunction::kind() const {
  return std::visit(Overloaded{
                        [](const ZeroFunction&) { return std::string_view("zero"); },
                        [](const BoxIndicator&) { return std::string_view("box_indicator"); },
                        [](const SimplexIndicator&) {
                          return std::string_view("simplex_indicator");
                        },
                        [](const L1Norm&) { return std::string_view("l1"); },
                        [](const HalfSquaredNorm&) { return std::string_view("quadratic"); },
                    },
                    descriptor_);
}

Point prox(const ProxFunction& f, double lambda, const Point& x) { return f.prox(lambda, x); }

Point conjugate_prox(const ProxFunction& f, double lambda, const Point& x) {
  require_positive_step(lambda);
  require_finite(x, "conjugate_prox argument");
  return x - lambda * f.prox(1.0 / lambda, x / lambda);
}

Point project_simplex(const Point& x) {
  if (x.size() == 0) throw InvalidInput("project_simplex: empty point");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  return (x.array() - shift).cwiseMax(0.0).matrix();
}

double estimate_lipschitz(const LipOperator& B, std::size_t sample_count, double radius,
                          std::uint64_t seed) {
  if (sample_count < 2) throw ParameterError("estimate_lipschitz: need sample_count >= 2");
  if (!(radius > 0.0)) throw ParameterError("estimate_lipschitz: radius must be positive");
  RngStream rng(seed, 0x4c495053ULL);
  const Index d = B.dim();
  double best = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < sample_count; ++k) {
    Point x(d), y(d);
    for (Index i = 0; i < d; ++i) x[i] = radius * (2.0 * rng.uniform() - 1.0);
    for (Index i = 0; i < d; ++i) y[i] = radius * (2.0 * rng.uniform() - 1.0);
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    any = true;
    best = std::max(best, (B(x) - B(y)).norm() / dist);
  }
  if (!any) throw SamplingError("estimate_lipschitz: all sampled pairs were degenerate");
  return best;
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix: expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ParseError("matrix: ragged rows");
    }
    for (Index c = 0; c < cols; ++c) M(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return M;
}

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Point point_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("point: expected an array of numbers");
  Point x(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) x[static_cast<Index>(i)] = j[i].get<double>();
  return x;
}

nlohmann::json point_to_json(const Point& x) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < x.size(); ++i) out.push_back(x[i]);
  return out;
}

namespace {

std::pair<Point, Point> box_from_json(const nlohmann::json& j) {
  const auto& lo = j.at("lower");
  const auto& hi = j.at("upper");
  if (!lo.is_array() || !hi.is_array() || lo.size() != hi.size()) {
    throw ParseError("box: lower/upper must be arrays of equal length");
  }
  Point lower(static_cast<Index>(lo.size())), upper(static_cast<Index>(hi.size()));
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lower[static_cast<Index>(i)] = bound_from_json(lo[i], -kInf);
    upper[static_cast<Index>(i)] = bound_from_json(hi[i], kInf);
  }
  return {lower, upper};
}

nlohmann::json box_to_json(std::string_view kind, const Point& lower, const Point& upper) {
  nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
  for (Index i = 0; i < lower.size(); ++i) {
    lo.push_back(bound_to_json(lower[i]));
    hi.push_back(bound_to_json(upper[i]));
  }
  return {{"kind", kind}, {"lower", lo}, {"upper", hi}};
}

}  // namespace

MonotoneMap monotone_map_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "zero") return MonotoneMap::zero();
    if (kind == "affine") return MonotoneMap::affine(matrix_from_json(j.at("M")), point_from_json(j.at("q")));
    if (kind == "box_normal_cone") {
      auto [lo, hi] = box_from_json(j);
      return MonotoneMap::box_normal_cone(std::move(lo), std::move(hi));
    }
    if (kind == "l1") return MonotoneMap::l1(j.at("tau").get<double>());
    if (kind == "quadratic") {
      if (j.contains("Q")) {
        Point c = j.contains("c") ? point_from_json(j.at("c")) : Point();
        return MonotoneMap::quadratic(matrix_from_json(j.at("Q")), std::move(c));
      }
      return MonotoneMap::isotropic_quadratic(j.value("weight", 1.0));
    }
    throw ParseError("unknown monotone map kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("monotone map descriptor: ") + e.what());
  }
}

nlohmann::json to_json(const MonotoneMap& A) {
  return std::visit(
      Overloaded{
          [](const ZeroOperator&) -> nlohmann::json { return {{"kind", "zero"}}; },
          [](const AffineOperator& a) -> nlohmann::json {
            return {{"kind", "affine"}, {"M", matrix_to_json(a.M)}, {"q", point_to_json(a.q)}};
          },
          [](const BoxNormalCone& b) -> nlohmann::json {
            return box_to_json("box_normal_cone", b.lower, b.upper);
          },
          [](const L1Subdifferential& l) -> nlohmann::json {
            return {{"kind", "l1"}, {"tau", l.tau}};
          },
          [](const QuadraticSubdifferential& q) -> nlohmann::json {
            nlohmann::json out = {{"kind", "quadratic"}};
            if (q.Q.size() == 0) {
              out["weight"] = q.weight;
            } else {
              out["Q"] = matrix_to_json(q.Q);
            }
            if (q.c.size() != 0) out["c"] = point_to_json(q.c);
            return out;
          },
      },
      A.descriptor());
}

ProxFunction prox_function_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "zero") return ProxFunction::zero();
    if (kind == "box_indicator") {
      auto [lo, hi] = box_from_json(j);
      return ProxFunction::box_indicator(std::move(lo), std::move(hi));
    }
    if (kind == "simplex_indicator") return ProxFunction::simplex_indicator();
    if (kind == "l1") return ProxFunction::l1(j.at("tau").get<double>());
    if (kind == "quadratic") return ProxFunction::half_squared_norm(j.value("weight", 1.0));
    throw ParseError("unknown prox function kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("prox function descriptor: ") + e.what());
  }
}

nlohmann::json to_json(const ProxFunction& f) {
  return std::visit(
      Overloaded{
          [](const ZeroFunction&) -> nlohmann::json { return {{"kind", "zero"}}; },
          [](const BoxIndicator& b) -> nlohmann::json {
            return box_to_json("box_indicator", b.lower, b.upper);
          },
          [](const SimplexIndicator&) -> nlohmann::json { return {{"kind", "simplex_indicator"}}; },
          [](const L1Norm& l) -> nlohmann::json { return {{"kind", "l1"}, {"tau", l.tau}}; },
          [](const HalfSquaredNorm& h) -> nlohmann::json {
            return {{"kind", "quadratic"}, {"weight", h.weight}};
          },
      },
      f.descriptor());
}

}  // namespace sfbf
