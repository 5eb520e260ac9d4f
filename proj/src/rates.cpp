// SPDX-License-Identifier: Apache-2.0
#include "sfbf/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfbf/errors.hpp"

namespace sfbf {

double phi_c(double c, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("phi_c: t must be positive, got " + std::to_string(t));
  if (!std::isfinite(c)) throw DomainError("phi_c: c must be finite");
  const double lt = std::log(t);
  if (std::abs(c) < 1e-8) {
    // (e^{c lt} - 1)/c = lt (1 + c lt/2 + (c lt)^2/6 + ...)
    const double u = c * lt;
    return lt * (1.0 + u / 2.0 + u * u / 6.0);
  }
  return std::expm1(c * lt) / c;
}

std::uint64_t minimal_n0(double a, double alpha) {
  if (!(a > 0.0)) throw ParameterError("recursion: a must be positive");
  if (!(alpha > 0.0)) throw ParameterError("recursion: alpha must be positive");
  auto n = static_cast<std::uint64_t>(std::ceil(std::pow(a, 1.0 / alpha)));
  n = std::max<std::uint64_t>(n, 2);
  while (a * std::pow(static_cast<double>(n), -alpha) >= 1.0) ++n;
  return n;
}

RecursionParams RecursionParams::make(double a, double b, double alpha, double beta, double s_init) {
  if (!(a > 0.0)) throw ParameterError("recursion: a must be positive");
  if (!(b >= 0.0)) throw ParameterError("recursion: b must be nonnegative");
  if (!(alpha > 0.5 && alpha <= 1.0)) throw ParameterError("recursion: alpha must be in (1/2, 1]");
  if (!(beta > 1.0)) throw ParameterError("recursion: beta must exceed 1");
  if (!(a <= beta)) throw ParameterError("recursion: need a <= beta");
  if (!(s_init >= 0.0)) throw ParameterError("recursion: s_init must be nonnegative");
  RecursionParams p;
  p.a = a;
  p.b = b;
  p.alpha = alpha;
  p.beta = beta;
  p.s_init = s_init;
  p.n0 = minimal_n0(a, alpha);
  return p;
}

RecursionParams RecursionParams::with_n0(std::uint64_t n0_value) const {
  if (n0_value < 2) throw ParameterError("recursion: n0 must be >= 2");
  if (a * std::pow(static_cast<double>(n0_value), -alpha) > 1.0) {
    throw ParameterError("recursion: a n0^-alpha must not exceed 1");
  }
  RecursionParams p = *this;
  p.n0 = n0_value;
  return p;
}

double RecursionParams::t() const { return 1.0 - std::pow(2.0, alpha - 1.0); }

double lemma36_bound(const RecursionParams& p, std::uint64_t n) {
  if (n < 2 * p.n0) {
    throw DomainError("lemma36_bound: n = " + std::to_string(n) + " below 2 n0 = " + std::to_string(2 * p.n0));
  }
  const double nd = static_cast<double>(n);
  const double n0 = static_cast<double>(p.n0);
  if (p.alpha == 1.0) {
    const double head = p.s_init * std::pow(n0 / (nd + 1.0), p.a);
    const double tail = p.b / std::pow(nd + 1.0, p.a) * std::pow(1.0 + 1.0 / n0, p.a) *
                        phi_c(p.a + 1.0 - p.beta, nd);
    return head + tail;
  }
  const double one_minus = 1.0 - p.alpha;
  const double grow = p.a * std::pow(n0, one_minus) / one_minus;
  const double decay = -p.a * p.t() * std::pow(nd + 1.0, one_minus) / one_minus;
  // Combine exponentials in log space; the individual factors overflow for small 1 - alpha.
  double first = p.b * phi_c(1.0 - p.beta, nd) * std::exp(decay);
  if (p.s_init > 0.0) first += std::exp(std::log(p.s_init) + grow + decay);
  const double second = p.b * std::pow(2.0, p.beta - p.alpha) / (p.a * std::pow(nd - 2.0, p.beta - p.alpha));
  return first + second;
}

double RecursionSequence::at(std::uint64_t n) const {
  if (n < n0_ || n > horizon()) {
    throw DomainError("recursion sequence: index " + std::to_string(n) + " outside [" + std::to_string(n0_) +
                      ", " + std::to_string(horizon()) + "]");
  }
  return values_[n - n0_];
}

RecursionSequence simulate_recursion(const RecursionParams& p, std::uint64_t horizon) {
  if (!(p.a > 0.0)) throw ParameterError("recursion: a must be positive");
  if (horizon < p.n0) throw ParameterError("simulate_recursion: horizon must be >= n0");
  std::vector<double> values;
  values.reserve(horizon - p.n0 + 1);
  double s = p.s_init;
  values.push_back(s);
  for (std::uint64_t k = p.n0; k < horizon; ++k) {
    const double kd = static_cast<double>(k);
    s = std::max(0.0, (1.0 - p.a * std::pow(kd, -p.alpha)) * s + p.b * std::pow(kd, -p.beta));
    values.push_back(s);
  }
  return RecursionSequence(p.n0, std::move(values));
}

double effective_beta(double alpha, double eps_theta) { return std::min(2.0 * alpha, eps_theta); }

TheoryRate theory_rate(double a, double alpha, double beta) {
  if (!(alpha > 0.5 && alpha <= 1.0)) throw ParameterError("theory rate: alpha must be in (1/2, 1]");
  if (!(beta > 1.0) || !(a > 0.0)) throw ParameterError("theory rate: need a > 0, beta > 1");
  TheoryRate r;
  if (alpha < 1.0) {
    r.slope = alpha - beta;
  } else {
    r.slope = -std::min(a, beta - 1.0);
    r.log_correction = std::abs(a - (beta - 1.0)) < 1e-12;
  }
  return r;
}

RateVerdict fit_rate(const std::vector<double>& ns, const std::vector<double>& values,
                     std::optional<std::pair<double, double>> window, std::optional<TheoryRate> theory) {
  if (ns.size() != values.size()) throw InvalidInput("fit_rate: n and value columns differ in length");
  if (ns.empty()) throw DomainError("fit_rate: no data");
  const double n_max = *std::max_element(ns.begin(), ns.end());
  const auto win = window.value_or(std::make_pair(n_max / 10.0, n_max));
  if (!(win.first > 0.0) || !(win.second >= win.first)) throw DomainError("fit_rate: invalid window");

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < win.first || ns[i] > win.second) continue;
    if (!(values[i] > 0.0)) {
      throw DomainError("fit_rate: nonpositive value " + std::to_string(values[i]) + " at n = " +
                        std::to_string(ns[i]));
    }
    lx.push_back(std::log(ns[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 10) {
    throw DomainError("fit_rate: " + std::to_string(lx.size()) + " points in window, need >= 10");
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_rate: window holds a single distinct n");

  RateVerdict v;
  v.fitted_slope = sxy / sxx;
  v.intercept = my - v.fitted_slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (v.intercept + v.fitted_slope * lx[i]);
    sse += e * e;
  }
  v.residual = std::sqrt(sse / m);
  v.window = win;
  v.point_count = lx.size();
  if (theory) {
    v.theory_slope = theory->slope;
    v.log_correction = theory->log_correction;
  }
  return v;
}

}  // namespace sfbf
