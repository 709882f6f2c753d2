#pragma once

#include <cmath>
#include <span>

#include "dcml/error.hpp"
#include "dcml/types.hpp"

namespace dcml {

/// Scale constant that makes the bisquare M-scale consistent at the normal
/// when gamma = 0.5.
inline constexpr double kScaleTuning = 1.547;

/// Default asymptotic Gaussian efficiency of the MM step.
inline constexpr double kMmEfficiency = 0.85;

/// Tuning of the bisquare kernels shared by the S, MM and DCML estimators.
///
/// `c0` drives the M-scale, `c1` the efficiency of the MM step, and `gamma`
/// is the right-hand side of the M-scale equation.
struct KernelConfig {
  double c0 = kScaleTuning;
  double c1 = 0.0;
  double gamma = 0.5;

  /// Throws InvalidParameter unless c0 > 0, c1 > c0 and 0 < gamma < 1.
  void validate() const;

  /// c0 = 1.547, c1 tuned to `efficiency`, gamma = 0.5 (1 - p/n).
  static KernelConfig regression(int p, int n, double efficiency = kMmEfficiency);

  /// c0 consistent for sqrt(chi2_p) at gamma = 0.5 (1 - p/n). Only c0 and
  /// gamma are read by the multivariate estimators; c1 is set to 2 c0.
  static KernelConfig multivariate(int p, int n);
};

namespace detail {
[[noreturn]] void throw_bad_tuning(double c);
}

/// Tukey bisquare loss scaled to [0, 1]: 1 - (1 - (t/c)^2)^3 for |t| <= c.
inline double rho_bisquare(double t, double c) {
  if (!(c > 0.0)) detail::throw_bad_tuning(c);
  const double u = t / c;
  const double u2 = u * u;
  if (u2 >= 1.0) return 1.0;
  const double v = 1.0 - u2;
  return 1.0 - v * v * v;
}

/// d rho / dt, no renormalization.
inline double psi_bisquare(double t, double c) {
  if (!(c > 0.0)) detail::throw_bad_tuning(c);
  const double u = t / c;
  const double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  const double v = 1.0 - u2;
  return 6.0 * t / (c * c) * v * v;
}

/// d psi / dt.
inline double psi_prime_bisquare(double t, double c) {
  if (!(c > 0.0)) detail::throw_bad_tuning(c);
  const double u = t / c;
  const double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  return 6.0 / (c * c) * (1.0 - u2) * (1.0 - 5.0 * u2);
}

/// psi(t) / t, extended by continuity to 6 / c^2 at t = 0.
inline double weight_bisquare(double t, double c) {
  if (!(c > 0.0)) detail::throw_bad_tuning(c);
  const double u = t / c;
  const double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  const double v = 1.0 - u2;
  return 6.0 / (c * c) * v * v;
}

struct MScale {
  double value = 0.0;
  /// Set when too many residuals are exactly zero for a positive root.
  bool degenerate = false;
};

/// Solves (1/n) sum rho(r_i / s, c) = gamma for s by bracketed bisection.
///
/// The returned scale satisfies the equation to within 1e-9 absolute on the
/// left-hand side. When the proportion of nonzero residuals is <= gamma the
/// equation has no positive root and {0, degenerate} is returned.
MScale m_scale(std::span<const double> residuals, double c, double gamma);

inline MScale m_scale(const Vector& residuals, double c, double gamma) {
  return m_scale(std::span<const double>(residuals.data(),
                                         static_cast<std::size_t>(residuals.size())),
                 c, gamma);
}

/// Left-hand side of the M-scale equation at scale s (> 0).
double mean_rho(std::span<const double> residuals, double scale, double c);

/// (E psi'(u))^2 / E psi(u)^2 for u ~ N(0, 1).
double gaussian_efficiency(double c);

/// Bisquare constant whose Gaussian asymptotic efficiency equals `target_eff`.
double tuning_constant_for_efficiency(double target_eff);

/// Constant c such that E rho(sqrt(X), c) = gamma for X ~ chi2_p.
double consistency_constant(int p, double gamma);

}  // namespace dcml
