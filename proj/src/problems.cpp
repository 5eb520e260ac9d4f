// SPDX-License-Identifier: Apache-2.0
#include "sfbf/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfbf/errors.hpp"
#include "sfbf/rng.hpp"

namespace sfbf {

namespace {

constexpr std::uint64_t kGeneratorStream = 0x47454e;  // "GEN"

Matrix gaussian_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix G(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) G(i, j) = rng.normal();
  return G;
}

Point uniform_point(Index d, double lo, double hi, RngStream& rng) {
  Point x(d);
  for (Index i = 0; i < d; ++i) x[i] = lo + (hi - lo) * rng.uniform();
  return x;
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
Matrix random_orthogonal(Index d, RngStream& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  Matrix Q = qr.householderQ();
  // Fix column signs so the draw does not depend on the QR sign convention.
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

double box_residual(const Point& lower, const Point& upper, const Point& g, const Point& x) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double tol_lo = 1e-12 * (1.0 + std::abs(lower[i]));
    const double tol_hi = 1e-12 * (1.0 + std::abs(upper[i]));
    if (x[i] < lower[i] - tol_lo || x[i] > upper[i] + tol_hi) return std::numeric_limits<double>::infinity();
    const bool at_lo = x[i] <= lower[i] + tol_lo;
    const bool at_hi = x[i] >= upper[i] - tol_hi;
    double r;
    if (at_lo && at_hi) {
      r = 0.0;  // degenerate interval, normal cone is the whole line
    } else if (at_lo) {
      r = std::max(-g[i], 0.0);
    } else if (at_hi) {
      r = std::max(g[i], 0.0);
    } else {
      r = g[i];
    }
    acc += r * r;
  }
  return std::sqrt(acc);
}

double l1_residual(double tau, const Point& g, const Point& x) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double r = x[i] != 0.0 ? g[i] + tau * (x[i] > 0 ? 1.0 : -1.0) : std::max(std::abs(g[i]) - tau, 0.0);
    acc += r * r;
  }
  return std::sqrt(acc);
}

// Active-set refinement of an approximate solution of 0 in Mx + q + N_box(x).
Point polish_affine_box(const Matrix& M, const Point& q, const Point& lo, const Point& hi, const Point& approx) {
  const Index d = approx.size();
  const Point g = M * approx + q;
  Point x = approx;
  std::vector<Index> free_idx;
  for (Index i = 0; i < d; ++i) {
    if (approx[i] <= lo[i] + 1e-6 && g[i] >= 0.0) {
      x[i] = lo[i];
    } else if (approx[i] >= hi[i] - 1e-6 && g[i] <= 0.0) {
      x[i] = hi[i];
    } else {
      free_idx.push_back(i);
    }
  }
  if (free_idx.empty()) return x;
  const auto nf = static_cast<Index>(free_idx.size());
  Matrix Mff(nf, nf);
  Point rhs(nf);
  for (Index a = 0; a < nf; ++a) {
    rhs[a] = -q[free_idx[a]];
    for (Index j = 0; j < d; ++j) {
      if (std::find(free_idx.begin(), free_idx.end(), j) == free_idx.end()) rhs[a] -= M(free_idx[a], j) * x[j];
    }
    for (Index b = 0; b < nf; ++b) Mff(a, b) = M(free_idx[a], free_idx[b]);
  }
  const Point xf = Mff.fullPivLu().solve(rhs);
  for (Index a = 0; a < nf; ++a) x[free_idx[a]] = xf[a];
  return x;
}

struct AffineBox {
  Matrix M;
  Point q;
  Point lower, upper;
  double lipschitz;
};

// Deterministic Tseng iteration with periodic active-set polishing.
std::pair<Point, double> solve_affine_box(const AffineBox& p) {
  const MonotoneMap A = MonotoneMap::box_normal_cone(p.lower, p.upper);
  const LipOperator B = LipOperator::affine(p.M, p.q, p.lipschitz, 0.0);
  const double lambda = 0.9 / p.lipschitz;
  Point x = A.resolvent(1.0, Point::Zero(p.q.size()));
  Point best = x;
  double best_res = inclusion_residual(A, B, x);
  for (int outer = 0; outer < 2000 && best_res > 1e-12; ++outer) {
    for (int k = 0; k < 1000; ++k) {
      const Point Bx = B(x);
      const Point y = A.resolvent(lambda, x - lambda * Bx);
      x = y - lambda * (B(y) - Bx);
    }
    for (const Point& cand : {x, polish_affine_box(p.M, p.q, p.lower, p.upper, x)}) {
      const double res = inclusion_residual(A, B, cand);
      if (res < best_res) {
        best_res = res;
        best = cand;
      }
    }
  }
  return {best, best_res};
}

// Proximal gradient with support polishing for the lasso.
std::pair<Point, double> solve_lasso(const Matrix& H, const Point& c, double tau, double lipschitz) {
  const Index d = c.size();
  const MonotoneMap A = MonotoneMap::l1(tau);
  const LipOperator B = LipOperator::affine(H, -c, std::max(lipschitz, 1e-300), 0.0);
  const double step = 1.0 / std::max(lipschitz, 1e-12);
  Point x = Point::Zero(d);
  Point best = x;
  double best_res = inclusion_residual(A, B, x);
  for (int outer = 0; outer < 2000 && best_res > 1e-12; ++outer) {
    for (int k = 0; k < 1000; ++k) x = A.resolvent(step, x - step * (H * x - c));
    std::vector<Index> support;
    for (Index i = 0; i < d; ++i)
      if (std::abs(x[i]) > 1e-9) support.push_back(i);
    Point cand = Point::Zero(d);
    if (!support.empty()) {
      const auto ns = static_cast<Index>(support.size());
      Matrix Hs(ns, ns);
      Point rhs(ns);
      for (Index a = 0; a < ns; ++a) {
        rhs[a] = c[support[a]] - tau * (x[support[a]] > 0 ? 1.0 : -1.0);
        for (Index b = 0; b < ns; ++b) Hs(a, b) = H(support[a], support[b]);
      }
      const Point xs = Hs.completeOrthogonalDecomposition().solve(rhs);
      for (Index a = 0; a < ns; ++a) cand[support[a]] = xs[a];
    }
    for (const Point& p : {x, cand}) {
      const double res = inclusion_residual(A, B, p);
      if (res < best_res) {
        best_res = res;
        best = p;
      }
    }
  }
  return {best, best_res};
}

void require_reference(const Benchmark& b) {
  if (!(b.residual <= kReferenceTolerance)) {
    std::ostringstream msg;
    msg << "benchmark '" << b.name << "': reference residual " << b.residual << " exceeds "
        << kReferenceTolerance;
    throw InvalidInput(msg.str());
  }
}

// Instance construction without solving; shared by generators and the loader.
Benchmark build_affine_box(std::string name, const Matrix& M, const Point& q, const Point& lower, const Point& upper,
                           double lipschitz, double strong_mod) {
  if (M.rows() != M.cols() || M.rows() != q.size() || lower.size() != q.size() || upper.size() != q.size()) {
    throw InvalidInput("affine box: inconsistent dimensions");
  }
  Benchmark b;
  b.name = std::move(name);
  b.kind = "affine_box";
  const MonotoneMap A = MonotoneMap::box_normal_cone(lower, upper);
  b.inclusion = InclusionProblem{A, LipOperator::affine(M, q, lipschitz, strong_mod), {}, std::nullopt};
  b.data = {{"A", to_json(A)},
            {"M", matrix_to_json(M)},
            {"q", point_to_json(q)},
            {"lipschitz", lipschitz},
            {"strong_mod", strong_mod}};
  return b;
}

Benchmark build_lasso(std::string name, const Matrix& data, const Point& targets, double tau) {
  if (!(tau > 0.0)) throw ParameterError("lasso: tau must be positive");
  if (data.rows() < 1 || data.cols() < 1 || data.rows() != targets.size()) {
    throw InvalidInput("lasso: data must be m x d with m targets");
  }
  const Index m = data.rows();
  const double md = static_cast<double>(m);
  const Matrix H = data.transpose() * data / md;
  const Point c = data.transpose() * targets / md;
  std::vector<LipOperator> rows;
  rows.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const Point a = data.row(i).transpose();
    const double norm2 = a.squaredNorm();
    rows.push_back(LipOperator::affine(a * a.transpose(), -targets[i] * a, norm2, 0.0));
  }
  Benchmark b;
  b.name = std::move(name);
  b.kind = "lasso";
  b.inclusion = InclusionProblem{MonotoneMap::l1(tau), LipOperator::affine(H, -c), std::move(rows),
                                 ProxFunction::l1(tau)};
  b.data = {{"data", matrix_to_json(data)}, {"targets", point_to_json(targets)}, {"tau", tau}};
  return b;
}

Benchmark build_bilinear(std::string name, const Matrix& K) {
  Benchmark b;
  b.name = std::move(name);
  b.kind = "bilinear_saddle";
  const Index dp = K.cols(), dd = K.rows();
  b.saddle = SaddleProblem::make(ProxFunction::box_indicator(dp, -1.0, 1.0), ProxFunction::box_indicator(dd, -1.0, 1.0),
                                 SmoothFunction::half_squared_norm(dp), SmoothFunction::half_squared_norm(dd), K);
  b.data = {{"K", matrix_to_json(K)}};
  return b;
}

// The saddle system as one affine inclusion in (x, v).
AffineBox bilinear_as_inclusion(const SaddleProblem& p) {
  const Index dp = p.primal_dim(), dd = p.dual_dim();
  AffineBox box;
  box.M = Matrix::Zero(dp + dd, dp + dd);
  box.M.topLeftCorner(dp, dp) = Matrix::Identity(dp, dp);
  box.M.topRightCorner(dp, dd) = p.K.transpose();
  box.M.bottomLeftCorner(dd, dp) = -p.K;
  box.M.bottomRightCorner(dd, dd) = Matrix::Identity(dd, dd);
  box.q = Point::Zero(dp + dd);
  box.lower = Point::Constant(dp + dd, -1.0);
  box.upper = Point::Constant(dp + dd, 1.0);
  box.lipschitz = spectral_norm(box.M);
  return box;
}

void solve_reference(Benchmark& b) {
  if (b.kind == "affine_box") {
    const auto& A = std::get<BoxNormalCone>(b.inclusion->A.descriptor());
    const auto& aff = *b.inclusion->B.affine_form();
    auto [x, res] = solve_affine_box({aff.M, aff.q, A.lower, A.upper, b.inclusion->B.lipschitz()});
    b.reference = std::move(x);
    b.provenance = "deterministic_tseng+active_set";
  } else if (b.kind == "lasso") {
    const auto& aff = *b.inclusion->B.affine_form();
    const double tau = std::get<L1Subdifferential>(b.inclusion->A.descriptor()).tau;
    auto [x, res] = solve_lasso(aff.M, -aff.q, tau, b.inclusion->B.lipschitz());
    b.reference = std::move(x);
    b.provenance = "proximal_gradient+support";
  } else {
    const auto sys = bilinear_as_inclusion(*b.saddle);
    auto [z, res] = solve_affine_box(sys);
    const Index dp = b.saddle->primal_dim();
    b.reference = z.head(dp);
    b.reference_dual = z.tail(b.saddle->dual_dim());
    b.provenance = "deterministic_tseng+active_set";
  }
}

void check_reference(Benchmark& b) {
  if (b.is_saddle()) {
    b.residual = saddle_residual(*b.saddle, b.reference, b.reference_dual);
  } else {
    b.residual = inclusion_residual(b.inclusion->A, b.inclusion->B, b.reference);
  }
  require_reference(b);
}

}  // namespace

double inclusion_residual(const MonotoneMap& A, const LipOperator& B, const Point& x) {
  if (x.size() != B.dim()) throw InvalidInput("residual: dimension mismatch");
  const Point g = B(x);
  return std::visit(
      [&](const auto& op) -> double {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, BoxNormalCone>) {
          return box_residual(op.lower, op.upper, g, x);
        } else if constexpr (std::is_same_v<T, L1Subdifferential>) {
          return l1_residual(op.tau, g, x);
        } else if constexpr (std::is_same_v<T, ZeroOperator>) {
          return g.norm();
        } else {
          return (x - A.resolvent(1.0, x - g)).norm();
        }
      },
      A.descriptor());
}

double saddle_residual(const SaddleProblem& p, const Point& x, const Point& v) {
  const Point gx = p.h.grad.base()(x) + p.K.transpose() * v;
  const Point gv = p.ell.grad.base()(v) - p.K * x;
  const Point rx = x - p.f.prox(1.0, x - gx);
  const Point rv = v - p.g_star.prox(1.0, v - gv);
  return std::sqrt(rx.squaredNorm() + rv.squaredNorm());
}

Benchmark make_affine_box(std::string name, Matrix M, Point q, Point lower, Point upper, double lipschitz,
                          double strong_mod, std::uint64_t seed, nlohmann::json params) {
  Benchmark b = build_affine_box(std::move(name), M, q, lower, upper, lipschitz, strong_mod);
  b.seed = seed;
  b.params = std::move(params);
  solve_reference(b);
  check_reference(b);
  return b;
}

Benchmark make_strongly_monotone_affine(Index d, double mu, double L, std::uint64_t seed) {
  if (d < 1) throw ParameterError("strongly monotone affine: d must be >= 1");
  if (!(mu > 0.0) || !(mu <= L)) throw ParameterError("strongly monotone affine: need 0 < mu <= L");
  RngStream rng(seed, kGeneratorStream);
  const Matrix Z = gaussian_matrix(d, d, rng);
  Matrix G = Z - Z.transpose();
  const double g_norm = spectral_norm(G);
  const double target = std::min(L / 2.0, std::sqrt(L * L - mu * mu));
  if (g_norm > 0.0) G *= target / g_norm;
  const Matrix M = mu * Matrix::Identity(d, d) + G;
  const Point x_u = uniform_point(d, -1.5, 1.5, rng);
  const Point q = -M * x_u;
  return make_affine_box("strongly_monotone_affine", M, q, Point::Constant(d, -1.0), Point::Constant(d, 1.0), L, mu,
                         seed, {{"generator", "strongly_monotone_affine"}, {"d", d}, {"mu", mu}, {"L", L}, {"seed", seed}});
}

Benchmark make_monotone_skew(Index d, double L, std::uint64_t seed) {
  if (d < 2 || d % 2 != 0) throw ParameterError("monotone skew: d must be even and >= 2");
  if (!(L > 0.0)) throw ParameterError("monotone skew: L must be positive");
  RngStream rng(seed, kGeneratorStream);
  const Matrix Q = random_orthogonal(d, rng);
  Matrix D = Matrix::Zero(d, d);
  for (Index k = 0; k < d / 2; ++k) {
    const double omega = k == 0 ? L : L / 2.0 + (L / 2.0) * rng.uniform();
    D(2 * k, 2 * k + 1) = omega;
    D(2 * k + 1, 2 * k) = -omega;
  }
  Matrix G = Q * D * Q.transpose();
  G = 0.5 * (G - G.transpose());  // exact skew symmetry
  const Point x_t = uniform_point(d, -0.5, 0.5, rng);
  const Point q = -G * x_t;
  return make_affine_box("monotone_skew", G, q, Point::Constant(d, -1.0), Point::Constant(d, 1.0), L, 0.0, seed,
                         {{"generator", "monotone_skew"}, {"d", d}, {"L", L}, {"seed", seed}});
}

Benchmark make_lasso(std::string name, Matrix data, Point targets, double tau, std::uint64_t seed,
                     nlohmann::json params) {
  Benchmark b = build_lasso(std::move(name), data, targets, tau);
  b.seed = seed;
  b.params = std::move(params);
  solve_reference(b);
  check_reference(b);
  return b;
}

Benchmark make_lasso(Index m, Index d, double tau, std::uint64_t seed) {
  if (m < 1 || d < 1) throw ParameterError("lasso: m, d must be >= 1");
  if (!(tau > 0.0)) throw ParameterError("lasso: tau must be positive");
  RngStream rng(seed, kGeneratorStream);
  const Matrix data = gaussian_matrix(m, d, rng);
  Point x_true = Point::Zero(d);
  for (Index i = 0; i < std::max<Index>(1, d / 4); ++i) x_true[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  Point targets = data * x_true;
  for (Index i = 0; i < m; ++i) targets[i] += 0.1 * rng.normal();
  return make_lasso("lasso", data, targets, tau, seed,
                    {{"generator", "lasso"}, {"m", m}, {"d", d}, {"tau", tau}, {"seed", seed}});
}

Benchmark make_bilinear_saddle(std::string name, Matrix K, std::uint64_t seed, nlohmann::json params) {
  Benchmark b = build_bilinear(std::move(name), K);
  b.seed = seed;
  b.params = std::move(params);
  solve_reference(b);
  check_reference(b);
  return b;
}

Benchmark make_bilinear_saddle(Index d_primal, Index d_dual, std::uint64_t seed) {
  if (d_primal < 1 || d_dual < 1) throw ParameterError("bilinear saddle: dimensions must be >= 1");
  RngStream rng(seed, kGeneratorStream);
  const Matrix K = gaussian_matrix(d_dual, d_primal, rng) / std::sqrt(static_cast<double>(d_primal));
  return make_bilinear_saddle(
      "bilinear_saddle", K, seed,
      {{"generator", "bilinear_saddle"}, {"d_primal", d_primal}, {"d_dual", d_dual}, {"seed", seed}});
}

Benchmark generate_benchmark(const nlohmann::json& spec) {
  try {
    const auto gen = spec.at("generator").get<std::string>();
    const auto seed = spec.value("seed", std::uint64_t{0});
    if (gen == "strongly_monotone_affine") {
      return make_strongly_monotone_affine(spec.at("d").get<Index>(), spec.value("mu", 1.0), spec.value("L", 4.0), seed);
    }
    if (gen == "monotone_skew") return make_monotone_skew(spec.at("d").get<Index>(), spec.value("L", 1.0), seed);
    if (gen == "lasso") {
      return make_lasso(spec.at("m").get<Index>(), spec.at("d").get<Index>(), spec.at("tau").get<double>(), seed);
    }
    if (gen == "bilinear_saddle") {
      return make_bilinear_saddle(spec.at("d_primal").get<Index>(), spec.at("d_dual").get<Index>(), seed);
    }
    throw ParseError("unknown benchmark generator '" + gen + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("benchmark spec: ") + e.what());
  }
}

nlohmann::json to_json(const Benchmark& b) {
  nlohmann::json ref = {{"x", point_to_json(b.reference)}, {"provenance", b.provenance}, {"residual", b.residual}};
  if (b.is_saddle()) ref["v"] = point_to_json(b.reference_dual);
  return {{"name", b.name}, {"kind", b.kind}, {"seed", b.seed}, {"params", b.params}, {"data", b.data},
          {"reference", ref}};
}

Benchmark benchmark_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto name = j.value("name", kind);
    const auto& data = j.at("data");
    Benchmark b;
    if (kind == "affine_box") {
      const MonotoneMap A = monotone_map_from_json(data.at("A"));
      const auto* box = std::get_if<BoxNormalCone>(&A.descriptor());
      if (!box) throw ParseError("affine_box: A must be a box_normal_cone");
      b = build_affine_box(name, matrix_from_json(data.at("M")), point_from_json(data.at("q")), box->lower,
                           box->upper, data.at("lipschitz").get<double>(), data.value("strong_mod", 0.0));
    } else if (kind == "lasso") {
      b = build_lasso(name, matrix_from_json(data.at("data")), point_from_json(data.at("targets")),
                      data.at("tau").get<double>());
    } else if (kind == "bilinear_saddle") {
      b = build_bilinear(name, matrix_from_json(data.at("K")));
    } else {
      throw ParseError("unknown benchmark kind '" + kind + "'");
    }
    b.seed = j.value("seed", std::uint64_t{0});
    b.params = j.value("params", nlohmann::json::object());
    const auto& ref = j.at("reference");
    b.reference = point_from_json(ref.at("x"));
    if (b.is_saddle()) b.reference_dual = point_from_json(ref.at("v"));
    b.provenance = ref.value("provenance", std::string("stored"));
    if (b.is_saddle()) {
      if (b.reference.size() != b.saddle->primal_dim() || b.reference_dual.size() != b.saddle->dual_dim()) {
        throw InvalidInput("benchmark reference has the wrong dimension");
      }
    } else if (b.reference.size() != b.inclusion->B.dim()) {
      throw InvalidInput("benchmark reference has the wrong dimension");
    }
    check_reference(b);
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("benchmark: ") + e.what());
  }
}

namespace {

std::vector<LipOperator> two_atoms(const LipOperator& B, double sigma0) {
  const Index d = B.dim();
  const Point delta = Point::Constant(d, sigma0 / std::sqrt(static_cast<double>(d)));
  std::vector<LipOperator> atoms;
  for (double sign : {1.0, -1.0}) {
    atoms.emplace_back(
        d, [B, delta, sign](const Point& x) -> Point { return B(x) + sign * delta; }, B.lipschitz(), B.strong_mod());
  }
  return atoms;
}

StochasticOracle oracle_for(const LipOperator& B, const std::vector<LipOperator>& components, const NoiseSpec& noise) {
  switch (noise.model) {
    case NoiseModel::gaussian_decay:
      return StochasticOracle::gaussian_decay(B, noise.sigma0, noise.p);
    case NoiseModel::gaussian_constant:
      return StochasticOracle::gaussian_constant(B, noise.sigma0);
    case NoiseModel::finite_sum:
      if (!components.empty()) return StochasticOracle::finite_sum(B, components);
      return StochasticOracle::finite_sum(B, two_atoms(B, noise.sigma0));
  }
  throw ParameterError("unknown noise model");
}

}  // namespace

StochasticOracle make_oracle(const Benchmark& bench, const NoiseSpec& noise) {
  if (!bench.inclusion) throw InvalidInput("make_oracle: '" + bench.name + "' is a saddle benchmark");
  return oracle_for(bench.inclusion->B, bench.inclusion->components, noise);
}

SaddleProblem make_noisy_saddle(const Benchmark& bench, const NoiseSpec& noise) {
  if (!bench.saddle) throw InvalidInput("make_noisy_saddle: '" + bench.name + "' is not a saddle benchmark");
  SaddleProblem p = *bench.saddle;
  p.h = p.h.with_gradient(oracle_for(p.h.grad.base(), {}, noise));
  p.ell = p.ell.with_gradient(oracle_for(p.ell.grad.base(), {}, noise));
  return p;
}

}  // namespace sfbf
