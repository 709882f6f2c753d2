#include "dcml/rho.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace dcml {

namespace detail {
void throw_bad_tuning(double c) {
  std::ostringstream msg;
  msg << "bisquare tuning constant must be positive, got " << c;
  throw Error(ErrorCode::InvalidParameter, msg.str());
}
}  // namespace detail

namespace {

template <class F>
double integrate(F f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Density of sqrt(X) for X ~ chi2_p.
double chi_pdf(double r, int p) {
  if (r <= 0.0) return p == 1 ? std::sqrt(2.0 / std::numbers::pi) : 0.0;
  const double half = 0.5 * p;
  const double log_norm = (half - 1.0) * std::log(2.0) + std::lgamma(half);
  return std::exp((p - 1) * std::log(r) - 0.5 * r * r - log_norm);
}

double chi_survival(double r, int p) {
  // P(sqrt(X) > r) = Q(p/2, r^2/2); integrate the tail numerically to stay in
  // the same quadrature family as the body.
  const double upper = std::max(r, 0.0) + 40.0;
  return integrate([p](double s) { return chi_pdf(s, p); }, std::max(r, 0.0), upper);
}

double expected_rho_chi(double c, int p) {
  const double body = integrate(
      [c, p](double r) { return rho_bisquare(r, c) * chi_pdf(r, p); }, 0.0, c);
  return body + chi_survival(c, p);
}

}  // namespace

void KernelConfig::validate() const {
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw Error(ErrorCode::InvalidParameter, "c0 must be positive");
  if (!(c1 > c0) || !std::isfinite(c1))
    throw Error(ErrorCode::InvalidParameter, "c1 must exceed c0");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw Error(ErrorCode::InvalidParameter, "gamma must lie in (0, 1)");
}

KernelConfig KernelConfig::regression(int p, int n, double efficiency) {
  if (p <= 0 || n <= p)
    throw Error(ErrorCode::InsufficientData, "regression kernel needs n > p > 0");
  static const double c1_default = tuning_constant_for_efficiency(kMmEfficiency);
  KernelConfig cfg;
  cfg.c0 = kScaleTuning;
  cfg.c1 = efficiency == kMmEfficiency ? c1_default
                                       : tuning_constant_for_efficiency(efficiency);
  cfg.gamma = 0.5 * (1.0 - static_cast<double>(p) / n);
  cfg.validate();
  return cfg;
}

KernelConfig KernelConfig::multivariate(int p, int n) {
  if (p <= 0 || n <= p)
    throw Error(ErrorCode::InsufficientData, "scatter kernel needs n > p > 0");
  KernelConfig cfg;
  cfg.gamma = 0.5 * (1.0 - static_cast<double>(p) / n);
  cfg.c0 = consistency_constant(p, cfg.gamma);
  cfg.c1 = 2.0 * cfg.c0;
  cfg.validate();
  return cfg;
}

double mean_rho(std::span<const double> residuals, double scale, double c) {
  const double inv = 1.0 / scale;
  double sum = 0.0;
  for (double r : residuals) sum += rho_bisquare(r * inv, c);
  return sum / static_cast<double>(residuals.size());
}

MScale m_scale(std::span<const double> residuals, double c, double gamma) {
  if (!(c > 0.0)) detail::throw_bad_tuning(c);
  if (!(gamma > 0.0 && gamma < 1.0))
    throw Error(ErrorCode::InvalidParameter, "m_scale: gamma must lie in (0, 1)");
  if (residuals.empty())
    throw Error(ErrorCode::InsufficientData, "m_scale: empty residual vector");

  const auto n = residuals.size();
  std::vector<double> abs_r;
  abs_r.reserve(n);
  std::size_t nonzero = 0;
  for (double r : residuals) {
    const double a = std::abs(r);
    if (!std::isfinite(a))
      throw Error(ErrorCode::InvalidParameter, "m_scale: non-finite residual");
    if (a > 0.0) ++nonzero;
    abs_r.push_back(a);
  }
  if (static_cast<double>(nonzero) <= gamma * static_cast<double>(n)) return {0.0, true};

  const double max_abs = *std::max_element(abs_r.begin(), abs_r.end());
  auto mid_it = abs_r.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(abs_r.begin(), mid_it, abs_r.end());
  const double median_abs = *mid_it;

  auto excess = [&](double s) { return mean_rho(residuals, s, c) - gamma; };

  double lo = median_abs > 0.0 ? median_abs / 10.0 : max_abs * 1e-3;
  double hi = 10.0 * max_abs;
  for (int k = 0; k < 2000 && excess(lo) <= 0.0; ++k) lo *= 0.5;
  for (int k = 0; k < 2000 && excess(hi) >= 0.0; ++k) hi *= 2.0;

  // excess() is decreasing in s; bisect in log scale.
  double mid = std::sqrt(lo * hi);
  for (int it = 0; it < 200; ++it) {
    mid = std::sqrt(lo * hi);
    const double f = excess(mid);
    if (f == 0.0) break;
    if (f > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi / lo - 1.0 < 1e-13) break;
  }
  return {mid, false};
}

double gaussian_efficiency(double c) {
  if (!(c > 0.0)) detail::throw_bad_tuning(c);
  const double e_dpsi =
      2.0 * integrate([c](double t) { return psi_prime_bisquare(t, c) * normal_pdf(t); },
                      0.0, c);
  const double e_psi2 = 2.0 * integrate(
                                  [c](double t) {
                                    const double v = psi_bisquare(t, c);
                                    return v * v * normal_pdf(t);
                                  },
                                  0.0, c);
  return e_dpsi * e_dpsi / e_psi2;
}

double tuning_constant_for_efficiency(double target_eff) {
  if (!(target_eff > 0.0 && target_eff < 1.0))
    throw Error(ErrorCode::InvalidParameter,
                "tuning_constant_for_efficiency: target must lie in (0, 1)");
  double lo = 0.05;
  double hi = 10.0;
  while (gaussian_efficiency(lo) > target_eff) lo *= 0.5;
  while (gaussian_efficiency(hi) < target_eff) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gaussian_efficiency(mid) < target_eff)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double consistency_constant(int p, double gamma) {
  if (p <= 0) throw Error(ErrorCode::InvalidParameter, "consistency_constant: p must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw Error(ErrorCode::InvalidParameter, "consistency_constant: gamma must lie in (0, 1)");
  // E rho(sqrt(X), c) decreases from 1 to 0 as c grows.
  double lo = 1e-3;
  double hi = 4.0 + 2.0 * std::sqrt(static_cast<double>(p));
  while (expected_rho_chi(hi, p) > gamma) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_rho_chi(mid, p) > gamma)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dcml
