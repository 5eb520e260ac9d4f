// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace sfbf {

/// (t^c - 1)/c, or log t at c = 0. Continuous in c.
double phi_c(double c, double t);

/// Smallest n0 >= 2 with a * n0^(-alpha) < 1.
std::uint64_t minimal_n0(double a, double alpha);

/// Parameters of s_{n+1} <= (1 - a n^-alpha) s_n + b n^-beta started at s_{n0} = s_init.
struct RecursionParams {
  double a = 1.0;
  double b = 1.0;
  double alpha = 1.0;
  double beta = 2.0;
  double s_init = 1.0;
  std::uint64_t n0 = 2;

  /// Validates the hypotheses and picks the minimal n0.
  static RecursionParams make(double a, double b, double alpha, double beta, double s_init);
  /// Same parameters with a caller-chosen n0 >= 2 satisfying a n0^(-alpha) <= 1.
  RecursionParams with_n0(std::uint64_t n0) const;

  /// 1 - 2^(alpha - 1).
  double t() const;
};

/// Closed-form upper bound on s_{n+1}, valid for n >= 2 n0.
double lemma36_bound(const RecursionParams& params, std::uint64_t n);

/// The extremal sequence with equality in the recursion, clipped at 0.
class RecursionSequence {
 public:
  RecursionSequence(std::uint64_t n0, std::vector<double> values) : n0_(n0), values_(std::move(values)) {}
  /// s_n for n0 <= n <= horizon.
  double at(std::uint64_t n) const;
  std::uint64_t n0() const { return n0_; }
  std::uint64_t horizon() const { return n0_ + values_.size() - 1; }

 private:
  std::uint64_t n0_;
  std::vector<double> values_;
};

RecursionSequence simulate_recursion(const RecursionParams& params, std::uint64_t horizon);

/// Predicted exponent of E||x_n - p||^2 = O(n^slope) for steps 4a/(mu n^alpha)
/// with beta = min(2 alpha, theta).
struct TheoryRate {
  double slope = 0.0;
  /// Set when alpha = 1 and a = beta - 1, where an extra log n factor appears.
  bool log_correction = false;
};

double effective_beta(double alpha, double eps_theta);
TheoryRate theory_rate(double a, double alpha, double beta);

struct RateVerdict {
  double fitted_slope = 0.0;
  double intercept = 0.0;
  std::optional<double> theory_slope;
  bool log_correction = false;
  std::pair<double, double> window{0.0, 0.0};
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
  std::size_t point_count = 0;
};

/// Least-squares slope of log value against log n over the window.
/// The default window is the final decade [n_max / 10, n_max].
RateVerdict fit_rate(const std::vector<double>& ns, const std::vector<double>& values,
                     std::optional<std::pair<double, double>> window = std::nullopt,
                     std::optional<TheoryRate> theory = std::nullopt);

}  // namespace sfbf
