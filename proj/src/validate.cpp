// SPDX-License-Identifier: Apache-2.0
#include "sfbf/validate.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "sfbf/errors.hpp"
#include "sfbf/fbf.hpp"
#include "sfbf/operators.hpp"
#include "sfbf/oracles.hpp"
#include "sfbf/problems.hpp"
#include "sfbf/rates.hpp"
#include "sfbf/rng.hpp"
#include "sfbf/saddle.hpp"

namespace sfbf {

bool ValidationReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::optional<CheckResult> ValidationReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return c;
  return std::nullopt;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  std::size_t failed = 0;
  for (const auto& c : checks) {
    list.push_back({{"suite", c.suite}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    failed += c.passed ? 0 : 1;
  }
  nlohmann::json j = {{"selector", selector},
                      {"passed", passed()},
                      {"total", checks.size()},
                      {"failed", failed},
                      {"elapsed_seconds", elapsed_seconds},
                      {"checks", list}};
  if (auto f = first_failure()) {
    j["first_failure"] = {{"suite", f->suite}, {"name", f->name}, {"detail", f->detail}};
  } else {
    j["first_failure"] = nullptr;
  }
  return j;
}

namespace {

class Recorder {
 public:
  Recorder(std::vector<CheckResult>& out, std::string suite) : out_(out), suite_(std::move(suite)) {}

  void check(const std::string& name, bool ok, const std::string& detail) {
    out_.push_back({suite_, name, ok, detail});
  }

  // Runs body, turning an escaped exception into a failed check.
  void guarded(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      check(name, false, std::string("exception: ") + e.what());
    }
  }

 private:
  std::vector<CheckResult>& out_;
  std::string suite_;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Point random_point(Index d, double scale, RngStream& rng) {
  Point x(d);
  for (Index i = 0; i < d; ++i) x[i] = scale * rng.normal();
  return x;
}

Matrix random_matrix(Index r, Index c, RngStream& rng) {
  Matrix M(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) M(i, j) = rng.normal();
  return M;
}

// Unit-scale monotone matrix: PSD part plus skew part.
Matrix random_monotone(Index d, double mu, RngStream& rng) {
  const Matrix P = random_matrix(d, d, rng);
  const Matrix S = random_matrix(d, d, rng);
  Matrix M = P * P.transpose() / static_cast<double>(d) + 0.5 * (S - S.transpose());
  M += mu * Matrix::Identity(d, d);
  return M / spectral_norm(M);
}

// ---------------------------------------------------------------------------

void suite_operators(std::vector<CheckResult>& out, std::uint64_t seed) {
  Recorder rec(out, "operators");
  RngStream rng(seed, 1);
  const Index d = 6;
  const Matrix Q = [&] {
    const Matrix P = random_matrix(d, d, rng);
    return Matrix(P * P.transpose() / static_cast<double>(d));
  }();
  std::vector<std::pair<std::string, MonotoneMap>> maps = {
      {"zero", MonotoneMap::zero()},
      {"affine", MonotoneMap::affine(random_monotone(d, 0.0, rng), random_point(d, 1.0, rng))},
      {"box_normal_cone", MonotoneMap::box_normal_cone(d, -1.0, 1.0)},
      {"l1", MonotoneMap::l1(0.5)},
      {"quadratic", MonotoneMap::quadratic(Q, random_point(d, 1.0, rng))},
      {"isotropic_quadratic", MonotoneMap::isotropic_quadratic(2.0)}};
  std::vector<std::pair<std::string, ProxFunction>> funcs = {
      {"zero", ProxFunction::zero()},
      {"box_indicator", ProxFunction::box_indicator(d, -1.0, 0.5)},
      {"simplex_indicator", ProxFunction::simplex_indicator()},
      {"l1", ProxFunction::l1(0.3)},
      {"half_squared_norm", ProxFunction::half_squared_norm(1.5)}};

  for (const auto& [name, A] : maps) {
    rec.guarded("firm_nonexpansive/" + name, [&] {
      double worst = 0.0;
      for (int k = 0; k < 300; ++k) {
        const double lambda = 0.05 + 5.0 * rng.uniform();
        const Point x = random_point(d, 2.0, rng), y = random_point(d, 2.0, rng);
        const Point jx = resolve(A, lambda, x), jy = resolve(A, lambda, y);
        worst = std::max(worst, (jx - jy).squaredNorm() - (jx - jy).dot(x - y));
      }
      rec.check("firm_nonexpansive/" + name, worst <= 1e-10, "max violation " + num(worst));
    });
  }
  for (const auto& [name, f] : funcs) {
    rec.guarded("prox_firm_nonexpansive/" + name, [&] {
      double worst = 0.0;
      for (int k = 0; k < 300; ++k) {
        const double lambda = 0.05 + 5.0 * rng.uniform();
        const Point x = random_point(d, 2.0, rng), y = random_point(d, 2.0, rng);
        const Point px = prox(f, lambda, x), py = prox(f, lambda, y);
        worst = std::max(worst, (px - py).squaredNorm() - (px - py).dot(x - y));
      }
      rec.check("prox_firm_nonexpansive/" + name, worst <= 1e-10, "max violation " + num(worst));
    });
    if (auto sub = f.subdifferential()) {
      rec.guarded("prox_resolvent_agreement/" + name, [&, sub = *sub] {
        double worst = 0.0;
        for (int k = 0; k < 300; ++k) {
          const double lambda = 0.05 + 5.0 * rng.uniform();
          const Point x = random_point(d, 2.0, rng);
          worst = std::max(worst, (prox(f, lambda, x) - resolve(sub, lambda, x)).cwiseAbs().maxCoeff());
        }
        rec.check("prox_resolvent_agreement/" + name, worst <= 1e-12, "max difference " + num(worst));
      });
    }
    rec.guarded("moreau_identity/" + name, [&] {
      double worst = 0.0;
      for (int k = 0; k < 300; ++k) {
        const double lambda = 0.05 + 5.0 * rng.uniform();
        const Point x = random_point(d, 2.0, rng);
        const Point lhs = conjugate_prox(f, lambda, x) + lambda * prox(f, 1.0 / lambda, x / lambda);
        worst = std::max(worst, (lhs - x).cwiseAbs().maxCoeff());
      }
      rec.check("moreau_identity/" + name, worst <= 1e-12, "max difference " + num(worst));
    });
  }
  rec.guarded("moreau_box_projection", [&] {
    const Point lo = Point::Constant(d, -1.0), hi = Point::Constant(d, 2.0);
    const ProxFunction box = ProxFunction::box_indicator(lo, hi);
    double worst = 0.0;
    for (int k = 0; k < 300; ++k) {
      const double lambda = 0.05 + 5.0 * rng.uniform();
      const Point x = random_point(d, 3.0, rng);
      const Point proj = (x / lambda).cwiseMax(lo).cwiseMin(hi);
      worst = std::max(worst, (conjugate_prox(box, lambda, x) - (x - lambda * proj)).cwiseAbs().maxCoeff());
    }
    rec.check("moreau_box_projection", worst <= 1e-12, "max difference " + num(worst));
  });
  rec.guarded("monotonicity_sampling", [&] {
    const double mu = 0.3;
    const Matrix M = random_monotone(d, 0.0, rng) + mu * Matrix::Identity(d, d);
    const LipOperator B = LipOperator::affine(M, random_point(d, 1.0, rng));
    double worst_mono = 0.0, worst_lip = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Point x = random_point(d, 2.0, rng), y = random_point(d, 2.0, rng);
      const Point diff = B(x) - B(y);
      worst_mono = std::max(worst_mono, B.strong_mod() * (x - y).squaredNorm() - diff.dot(x - y));
      worst_lip = std::max(worst_lip, diff.norm() - B.lipschitz() * (x - y).norm());
    }
    rec.check("monotonicity_sampling", worst_mono <= 1e-10 && worst_lip <= 1e-10,
              "monotonicity violation " + num(worst_mono) + ", Lipschitz violation " + num(worst_lip));
  });
  rec.guarded("lipschitz_estimate", [&] {
    const Matrix M = random_monotone(d, 0.1, rng);
    const LipOperator B = LipOperator::affine(M, random_point(d, 1.0, rng));
    const double est = estimate_lipschitz(B, 2000, 3.0, seed);
    rec.check("lipschitz_estimate", est > 0.0 && est <= B.lipschitz() * (1.0 + 1e-9),
              "estimate " + num(est) + " vs declared " + num(B.lipschitz()));
  });
}

// ---------------------------------------------------------------------------

void suite_oracles(std::vector<CheckResult>& out, std::uint64_t seed) {
  Recorder rec(out, "oracles");
  const Index d = 3;
  RngStream setup(seed, 2);
  const Matrix M = random_monotone(d, 0.5, setup);
  const LipOperator B = LipOperator::affine(M, random_point(d, 1.0, setup));
  const Point y = random_point(d, 1.0, setup);
  const Point By = B(y);

  std::vector<LipOperator> comps;
  const Matrix R = random_matrix(d, d, setup);
  const Matrix E = 0.3 * (R - R.transpose());  // skew, so both components stay monotone
  comps.push_back(LipOperator::affine(M + E, B.affine_form()->q + Point::Ones(d)));
  comps.push_back(LipOperator::affine(M - E, B.affine_form()->q - Point::Ones(d)));

  std::vector<std::pair<std::string, StochasticOracle>> oracles = {
      {"gaussian_decay", StochasticOracle::gaussian_decay(B, 1.0, 0.5)},
      {"gaussian_constant", StochasticOracle::gaussian_constant(B, 0.7)},
      {"finite_sum", StochasticOracle::finite_sum(B, comps)}};

  const std::size_t N = 100000;
  const std::uint64_t n_iter = 3;
  for (const auto& [name, oracle] : oracles) {
    rec.guarded("unbiased/" + name, [&, &oracle = oracle] {
      RngStream rng(seed, 100);
      Point sum = Point::Zero(d);
      Point sumsq = Point::Zero(d);
      for (std::size_t k = 0; k < N; ++k) {
        rng.seek(k, channel::s_primal);
        const Point s = oracle.draw_s(y, n_iter, rng);
        sum += s;
        sumsq += (s - By).cwiseAbs2();
      }
      const Point mean = sum / static_cast<double>(N);
      const Point target = oracle.base()(y);
      // Per-coordinate standard deviation from the declared model.
      Point sigma(d);
      if (auto atoms = oracle.atoms(y)) {
        Point var = Point::Zero(d);
        for (const auto& a : *atoms) var += (a - target).cwiseAbs2();
        sigma = (var / static_cast<double>(atoms->size())).cwiseSqrt();
      } else {
        sigma = Point::Constant(d, oracle.noise_std(n_iter));
      }
      const Point dev = (mean - target).cwiseAbs();
      const Point allowed = 4.0 * sigma / std::sqrt(static_cast<double>(N));
      bool ok = true;
      for (Index i = 0; i < d; ++i) ok = ok && dev[i] <= allowed[i] + 1e-15;
      rec.check("unbiased/" + name, ok, "max |mean - By| " + num(dev.maxCoeff()) + ", allowed " + num(allowed.minCoeff()));

      const double emp_var = sumsq.sum() / static_cast<double>(N);
      const double decl = oracle.conditional_variance(y, n_iter);
      const bool var_ok = std::abs(emp_var - decl) <= 0.03 * decl + 1e-15;
      rec.check("variance_schedule/" + name, var_ok, "empirical " + num(emp_var) + ", declared " + num(decl));
    });
  }

  rec.guarded("reproducibility", [&] {
    const auto& oracle = oracles[0].second;
    RngStream a(seed, 77), b(seed, 77), c(seed, 78);
    bool same = true, differs = false;
    for (std::uint64_t n = 0; n < 50; ++n) {
      a.seek(n, channel::r_primal);
      b.seek(n, channel::r_primal);
      c.seek(n, channel::r_primal);
      const Point ra = oracle.draw_r(y, n, a), rb = oracle.draw_r(y, n, b), rc = oracle.draw_r(y, n, c);
      same = same && (ra.array() == rb.array()).all();
      differs = differs || !(ra.array() == rc.array()).all();
    }
    rec.check("reproducibility", same && differs, same ? "distinct streams coincided" : "equal streams differed");
  });

  rec.guarded("inertia_bound", [&] {
    RngStream rng(seed, 3);
    bool ok = true;
    for (int k = 0; k < 5000 && ok; ++k) {
      const Point xc = random_point(4, 1.0, rng);
      const Point xp = rng.uniform() < 0.1 ? xc : Point(xc + random_point(4, std::pow(10.0, -6.0 * rng.uniform()), rng));
      const double eps = rng.uniform();
      const double theta = rng.uniform();
      const double a = inertia_coefficient(xc, xp, eps, theta);
      const double tol = inertia_equality_tolerance(xc);
      ok = a <= theta && a >= 0.0 && a * (xc - xp).norm() <= eps + tol * theta;
    }
    rec.check("inertia_bound", ok, ok ? "alpha <= theta and alpha ||dx|| <= eps + tol theta" : "violated");
  });

  rec.guarded("schedule_laws", [&] {
    const auto steps = StepSchedule::polynomial(2.0, 0.75, 1.5);
    double worst = 0.0;
    for (std::uint64_t k = 1; k < 5000; ++k) {
      const double expect = 4.0 * 2.0 / (1.5 * std::pow(static_cast<double>(k), 0.75));
      worst = std::max(worst, std::abs(steps.polynomial_value(k) - expect) / expect);
    }
    const EpsilonSchedule eps(0.3, 1.7);
    bool mono = true;
    double prev = -1.0, partial = 0.0;
    for (std::uint64_t n = 0; n < 20000; ++n) {
      partial += eps.at(n);
      mono = mono && partial >= prev && partial <= eps.sum_bound();
      prev = partial;
    }
    rec.check("schedule_laws", worst <= 1e-15 && mono,
              "step relative error " + num(worst) + (mono ? "" : ", eps partial sums not monotone/bounded"));
  });

  rec.guarded("summability_verdicts", [&] {
    const auto decay = validate_summability(StochasticOracle::gaussian_decay(B, 1.0, 1.0),
                                            StepSchedule::constant(0.5, 0.05, 1.0), 100);
    const auto flat = validate_summability(StochasticOracle::gaussian_constant(B, 1.0),
                                           StepSchedule::constant(0.5, 0.05, 1.0), 100);
    const auto weighted = validate_summability(StochasticOracle::gaussian_constant(B, 1.0),
                                               StepSchedule::polynomial(1.0, 1.0, 1.0), 100);
    const bool ok = decay.noise_condition == Verdict::summable && flat.noise_condition == Verdict::divergent &&
                    weighted.weighted_condition == Verdict::summable;
    rec.check("summability_verdicts", ok, "p=1: " + std::string(to_string(decay.noise_condition)) +
                                              ", p=0: " + std::string(to_string(flat.noise_condition)) +
                                              ", p=0 weighted: " + std::string(to_string(weighted.weighted_condition)));
  });
}

// ---------------------------------------------------------------------------

struct Lemma32Case {
  std::string name;
  Benchmark bench;
};

void suite_fbf(std::vector<CheckResult>& out, std::uint64_t seed) {
  Recorder rec(out, "fbf");

  std::vector<Lemma32Case> cases;
  rec.guarded("benchmarks", [&] {
    cases.push_back({"strongly_monotone_affine", make_strongly_monotone_affine(10, 1.0, 4.0, seed)});
    cases.push_back({"monotone_skew", make_monotone_skew(6, 2.0, seed)});
    cases.push_back({"lasso", make_lasso(2, 5, 0.1, seed)});
  });

  for (const auto& c : cases) {
    const auto& inc = *c.bench.inclusion;
    for (const std::string model : {"zero_noise", "finite_sum"}) {
      const std::string name = "lemma32/" + c.name + "/" + model;
      rec.guarded(name, [&] {
        const NoiseSpec spec = model == "zero_noise" ? NoiseSpec{NoiseModel::gaussian_constant, 0.0, 0.0}
                                                     : NoiseSpec{NoiseModel::finite_sum, 0.5, 0.0};
        const StochasticOracle oracle = make_oracle(c.bench, spec);
        FbfConfig cfg{inc.A, oracle, StepSchedule::constant(0.9 / inc.B.lipschitz(), 0.05, inc.B.lipschitz()),
                      EpsilonSchedule(0.1, 2.0), 0.5, 1000, {}, false};
        FbfState state = FbfState::start(Point::Ones(c.bench.dimension()), RngStream(seed, 5));
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 1000; ++k) {
          const StepTrace t = fbf_step_traced(state, cfg);
          worst = std::min(worst, lemma32_expected_residual(t, oracle, c.bench.reference));
          worst = std::min(worst, lemma32_residual(t, inc.B, c.bench.reference));
        }
        rec.check(name, worst >= -1e-10, "min residual " + num(worst));
      });
    }
  }

  rec.guarded("fixed_point", [&] {
    // Interior solution p with q = -M p, so p is a zero of A + B up to rounding in q.
    RngStream rng(seed, 6);
    const Index d = 5;
    const Matrix M = random_monotone(d, 0.2, rng);
    Point p(d);
    for (Index i = 0; i < d; ++i) p[i] = rng.uniform() - 0.5;
    const LipOperator B = LipOperator::affine(M, -M * p);
    FbfConfig cfg{MonotoneMap::box_normal_cone(d, -1.0, 1.0), StochasticOracle::exact(B),
                  StepSchedule::constant(0.9 / B.lipschitz(), 0.05, B.lipschitz()), EpsilonSchedule(0.1, 2.0), 0.7,
                  10, {}, false};
    FbfState state = FbfState::start(p, RngStream(seed, 6));
    for (int k = 0; k < 10; ++k) fbf_step(state, cfg);
    const double err = (state.x_cur - p).cwiseAbs().maxCoeff();
    rec.check("fixed_point", err <= 1e-14, "max drift " + num(err));
  });

  rec.guarded("deterministic_reduction", [&] {
    const Benchmark& b = cases.at(0).bench;
    const auto& A = b.inclusion->A;
    const auto& B = b.inclusion->B;
    const double lambda = 0.9 / B.lipschitz();
    FbfConfig cfg{A, StochasticOracle::exact(B), StepSchedule::constant(lambda, 0.05, B.lipschitz()),
                  EpsilonSchedule::none(), 0.0, 1000, {}, true};
    FbfState state = FbfState::start(Point::Ones(b.dimension()), RngStream(seed, 7));
    Point x = Point::Ones(b.dimension());
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      fbf_step(state, cfg);
      const Point Bx = B(x);
      const Point y = A.resolvent(lambda, x - lambda * Bx);
      x = y - lambda * (B(y) - Bx);
      worst = std::max(worst, (state.x_cur - x).cwiseAbs().maxCoeff());
    }
    rec.check("deterministic_reduction", worst <= 1e-14, "max per-iterate difference " + num(worst));
  });

  rec.guarded("composite_equivalence", [&] {
    const Benchmark& b = cases.at(2).bench;
    const StochasticOracle oracle = make_oracle(b, {NoiseModel::finite_sum, 0.0, 0.0});
    const auto steps = StepSchedule::constant(0.9 / b.inclusion->B.lipschitz(), 0.05, b.inclusion->B.lipschitz());
    const EpsilonSchedule eps(0.1, 2.0);
    FbfConfig cfg{b.inclusion->A, oracle, steps, eps, 0.5, 200, {}, false};
    FbfState s1 = FbfState::start(Point::Ones(b.dimension()), RngStream(seed, 8));
    FbfState s2 = s1;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      fbf_step(s1, cfg);
      composite_step(s2, *b.inclusion->f, oracle, steps, eps, 0.5);
      worst = std::max(worst, (s1.x_cur - s2.x_cur).cwiseAbs().maxCoeff());
    }
    rec.check("composite_equivalence", worst <= 1e-14, "max difference " + num(worst));
  });

  rec.guarded("seed_independence_zero_noise", [&] {
    const Benchmark& b = cases.at(1).bench;
    FbfConfig cfg{b.inclusion->A, StochasticOracle::exact(b.inclusion->B),
                  StepSchedule::constant(0.9 / b.inclusion->B.lipschitz(), 0.05, b.inclusion->B.lipschitz()),
                  EpsilonSchedule(0.1, 2.0), 0.5, 500, {}, false};
    const auto t1 = run_fbf(cfg, Point::Ones(b.dimension()), b.reference, RngStream(1, 1));
    const auto t2 = run_fbf(cfg, Point::Ones(b.dimension()), b.reference, RngStream(2, 99));
    bool same = t1.points.size() == t2.points.size();
    for (std::size_t i = 0; same && i < t1.points.size(); ++i) same = (t1.points[i].x.array() == t2.points[i].x.array()).all();
    rec.check("seed_independence_zero_noise", same, same ? "identical trajectories" : "trajectories differ");
  });
}

// ---------------------------------------------------------------------------

void suite_lemma36(std::vector<CheckResult>& out, std::uint64_t) {
  Recorder rec(out, "lemma36");
  for (double a : {0.5, 1.0, 2.0}) {
    for (double alpha : {0.6, 0.75, 1.0}) {
      for (double beta : {1.5, 2.0, 3.0}) {
        if (a > beta) continue;
        std::ostringstream name;
        name << "domination/a=" << a << ",alpha=" << alpha << ",beta=" << beta;
        rec.guarded(name.str(), [&] {
          const auto p = RecursionParams::make(a, 1.0, alpha, beta, 1.0);
          const auto seq = simulate_recursion(p, 10001);
          double worst_ratio = std::numeric_limits<double>::infinity();
          std::uint64_t worst_n = 0;
          bool ok = true;
          for (std::uint64_t n = 2 * p.n0; n <= 10000; ++n) {
            const double s = seq.at(n + 1);
            const double bound = lemma36_bound(p, n);
            if (s > bound * (1.0 + 1e-9)) ok = false;
            if (s > 0.0 && bound / s < worst_ratio) {
              worst_ratio = bound / s;
              worst_n = n;
            }
          }
          rec.check(name.str(), ok,
                    "n0 = " + std::to_string(p.n0) + ", min bound/s = " + num(worst_ratio) + " at n = " +
                        std::to_string(worst_n));
        });
      }
    }
  }
}

// ---------------------------------------------------------------------------

void suite_rates(std::vector<CheckResult>& out, std::uint64_t seed) {
  Recorder rec(out, "rates");
  rec.guarded("phi_monotone", [&] {
    bool ok = true;
    for (double c : {-2.0, -0.5, 0.0, 1e-9, 0.5, 1.0, 3.0}) {
      double prev = -std::numeric_limits<double>::infinity();
      for (double t = 0.05; t < 50.0; t *= 1.1) {
        const double v = phi_c(c, t);
        ok = ok && v > prev;
        prev = v;
      }
    }
    rec.check("phi_monotone", ok, "phi_c strictly increasing in t on the sampled grid");
  });
  rec.guarded("phi_continuity", [&] {
    double worst = 0.0;
    for (double c : {-1e-8, -1e-10, 1e-12, 5e-9, 1e-8}) {
      for (double t = 0.1; t <= 10.0; t += 0.05) worst = std::max(worst, std::abs(phi_c(c, t) - phi_c(0.0, t)));
    }
    rec.check("phi_continuity", worst <= 1e-6, "max deviation " + num(worst));
  });
  rec.guarded("rate_consistency", [&] {
    bool ok = true;
    std::string detail;
    for (double beta : {1.5, 2.0}) {
      const double a = beta;  // a > beta - 1
      const auto p = RecursionParams::make(a, 1.0, 1.0, beta, 1.0);
      const auto seq = simulate_recursion(p, 100000);
      std::vector<double> ns, vs;
      for (double e = 3.0; e <= 5.0 + 1e-12; e += 0.02) {
        const auto n = static_cast<std::uint64_t>(std::llround(std::pow(10.0, e)));
        ns.push_back(static_cast<double>(n));
        vs.push_back(seq.at(n));
      }
      const auto v = fit_rate(ns, vs, std::make_pair(1e3, 1e5));
      ok = ok && std::abs(v.fitted_slope + (beta - 1.0)) <= 0.1;
      detail += "beta=" + num(beta) + ": slope " + num(v.fitted_slope) + "; ";
    }
    rec.check("rate_consistency", ok, detail);
  });
  rec.guarded("fit_power_law", [&] {
    std::vector<double> ns, vs;
    for (int n = 1; n <= 1000; ++n) {
      ns.push_back(n);
      vs.push_back(5.0 / n);
    }
    const auto v = fit_rate(ns, vs);
    rec.check("fit_power_law", std::abs(v.fitted_slope + 1.0) <= 1e-6, "slope " + num(v.fitted_slope));
  });
  (void)seed;
}

// ---------------------------------------------------------------------------

void suite_saddle(std::vector<CheckResult>& out, std::uint64_t seed) {
  Recorder rec(out, "saddle");
  rec.guarded("saddle_ordering/bilinear", [&] {
    const Benchmark b = make_bilinear_saddle(10, 8, seed);
    const auto& p = *b.saddle;
    RngStream rng(seed, 9);
    const double g_star = *gap(p, b.reference, b.reference_dual);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      Point x(p.primal_dim()), v(p.dual_dim());
      for (Index i = 0; i < x.size(); ++i) x[i] = 2.0 * rng.uniform() - 1.0;
      for (Index i = 0; i < v.size(); ++i) v[i] = 2.0 * rng.uniform() - 1.0;
      const double left = *gap(p, b.reference, v);
      const double right = *gap(p, x, b.reference_dual);
      worst = std::min({worst, g_star - left, right - g_star});
    }
    rec.check("saddle_ordering/bilinear", worst >= -1e-9, "min slack " + num(worst));
  });
  rec.guarded("saddle_ordering/matrix_game", [&] {
    // 2x2 game without a pure equilibrium; mixed strategies equalize payoffs.
    const double a = 2.0, b = -1.0, c = -1.0, d = 1.0;
    Matrix K(2, 2);
    K << a, b, c, d;
    const auto p = SaddleProblem::make(ProxFunction::simplex_indicator(), ProxFunction::simplex_indicator(),
                                       SmoothFunction::zero(2), SmoothFunction::zero(2), K);
    const double x1 = (d - b) / (a - c + d - b);
    const double v1 = (d - c) / (a - b + d - c);
    const Point xs = Point(Eigen::Vector2d(x1, 1.0 - x1));
    const Point vs = Point(Eigen::Vector2d(v1, 1.0 - v1));
    RngStream rng(seed, 10);
    const double mid = *gap(p, xs, vs);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double s = rng.uniform(), t = rng.uniform();
      const Point x = Point(Eigen::Vector2d(s, 1.0 - s));
      const Point v = Point(Eigen::Vector2d(t, 1.0 - t));
      worst = std::min({worst, mid - *gap(p, xs, v), *gap(p, x, vs) - mid});
    }
    rec.check("saddle_ordering/matrix_game", worst >= -1e-9, "min slack " + num(worst));
  });
  rec.guarded("power_iteration", [&] {
    RngStream rng(seed, 11);
    const Matrix K = random_matrix(20, 30, rng);
    const auto est = power_iteration_norm(K, 5000, seed);
    const double exact = spectral_norm(K);
    rec.check("power_iteration", std::abs(est.estimate - exact) <= 1e-6,
              "estimate " + num(est.estimate) + ", SVD " + num(exact));
  });
  rec.guarded("ergodic_hull", [&] {
    const Benchmark b = make_bilinear_saddle(4, 3, seed);
    const auto p = make_noisy_saddle(b, {NoiseModel::gaussian_constant, 0.5, 0.0});
    PdState st = PdState::start(Point::Ones(4), Point::Ones(3), RngStream(seed, 12));
    Point lo = Point::Constant(4, 1e300), hi = Point::Constant(4, -1e300);
    const double lambda = p.reparametrized_step(0.05);
    for (int k = 0; k < 200; ++k) {
      pd_step(st, p, lambda, 0.0, 0.0);
      lo = lo.cwiseMin(st.last_y);
      hi = hi.cwiseMax(st.last_y);
    }
    const Point y_hat = ergodic_averages(st).first;
    const bool ok = (y_hat.array() >= lo.array() - 1e-12).all() && (y_hat.array() <= hi.array() + 1e-12).all();
    rec.check("ergodic_hull", ok, ok ? "averages inside the componentwise hull" : "average left the hull");
  });
  rec.guarded("deterministic_reduction", [&] {
    const Benchmark b = make_bilinear_saddle(5, 4, seed);
    const auto& p = *b.saddle;
    const double lambda = p.reparametrized_step(0.05);
    PdState s1 = PdState::start(Point::Ones(5), Point::Ones(4), RngStream(1, 1));
    PdState s2 = PdState::start(Point::Ones(5), Point::Ones(4), RngStream(2, 2));
    bool same = true;
    for (int k = 0; k < 300; ++k) {
      pd_step(s1, p, lambda, 0.0, 0.0);
      pd_step(s2, p, lambda, 0.0, 0.0);
      same = same && (s1.x_cur.array() == s2.x_cur.array()).all() && (s1.v_cur.array() == s2.v_cur.array()).all();
    }
    rec.check("deterministic_reduction", same, same ? "seed-independent" : "seeds changed a zero-noise run");
  });
}

// ---------------------------------------------------------------------------

void suite_problems(std::vector<CheckResult>& out, std::uint64_t seed) {
  Recorder rec(out, "problems");
  std::vector<std::pair<std::string, std::function<Benchmark()>>> gens = {
      {"strongly_monotone_affine", [&] { return make_strongly_monotone_affine(50, 1.0, 4.0, seed); }},
      {"monotone_skew", [&] { return make_monotone_skew(10, 1.0, seed); }},
      {"lasso", [&] { return make_lasso(100, 20, 0.1, seed); }},
      {"bilinear_saddle", [&] { return make_bilinear_saddle(10, 8, seed); }}};
  for (const auto& [name, gen] : gens) {
    rec.guarded("reference/" + name, [&, &name = name, &gen = gen] {
      const Benchmark b = gen();
      rec.check("reference/" + name, b.residual <= kReferenceTolerance, "residual " + num(b.residual));
      const Benchmark again = gen();
      rec.check("deterministic/" + name, to_json(b).dump() == to_json(again).dump(), "regenerated with the same seed");
      const Benchmark loaded = benchmark_from_json(nlohmann::json::parse(to_json(b).dump()));
      rec.check("round_trip/" + name, to_json(loaded).dump() == to_json(b).dump(), "JSON round trip");
      if (b.inclusion) {
        const double est = estimate_lipschitz(b.inclusion->B, 500, 2.0, seed);
        rec.check("declared_lipschitz/" + name, est <= b.inclusion->B.lipschitz() * (1.0 + 1e-9),
                  "estimate " + num(est) + " vs declared " + num(b.inclusion->B.lipschitz()));
      } else {
        const auto pn = power_iteration_norm(b.saddle->K, 2000, seed);
        rec.check("declared_norm/" + name, pn.estimate <= b.saddle->K_norm * 1.01,
                  "power iteration " + num(pn.estimate) + " vs declared " + num(b.saddle->K_norm));
      }
    });
  }
  rec.guarded("closed_form/interior", [&] {
    const double mu = 2.0;
    const Benchmark b = make_affine_box("toy", Matrix::Constant(1, 1, mu), Point::Constant(1, -mu / 2.0),
                                        Point::Constant(1, -1.0), Point::Constant(1, 1.0), mu, mu);
    rec.check("closed_form/interior", std::abs(b.reference[0] - 0.5) <= 1e-12, "x* = " + num(b.reference[0]));
  });
  rec.guarded("closed_form/boundary", [&] {
    const double mu = 2.0;
    const Benchmark b = make_affine_box("toy", Matrix::Constant(1, 1, mu), Point::Constant(1, -2.0 * mu),
                                        Point::Constant(1, -1.0), Point::Constant(1, 1.0), mu, mu);
    rec.check("closed_form/boundary", std::abs(b.reference[0] - 1.0) <= 1e-12, "x* = " + num(b.reference[0]));
  });
}

using SuiteFn = void (*)(std::vector<CheckResult>&, std::uint64_t);

const std::map<std::string, SuiteFn>& suite_table() {
  static const std::map<std::string, SuiteFn> table = {
      {"operators", suite_operators}, {"oracles", suite_oracles}, {"fbf", suite_fbf},     {"lemma36", suite_lemma36},
      {"rates", suite_rates},         {"saddle", suite_saddle},   {"problems", suite_problems}};
  return table;
}

}  // namespace

const std::vector<std::string>& validation_suites() {
  static const std::vector<std::string> names = {"operators", "oracles", "fbf", "lemma36", "rates", "saddle", "problems"};
  return names;
}

ValidationReport run_validation(std::string_view selector, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  ValidationReport report;
  report.selector = std::string(selector);
  const auto& table = suite_table();
  if (selector == "all") {
    for (const auto& name : validation_suites()) table.at(name)(report.checks, seed);
  } else {
    const auto it = table.find(std::string(selector));
    if (it == table.end()) {
      std::string known = "all";
      for (const auto& name : validation_suites()) known += ", " + name;
      throw InvalidInput("unknown suite '" + std::string(selector) + "' (known: " + known + ")");
    }
    it->second(report.checks, seed);
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace sfbf
