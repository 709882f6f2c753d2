#include "dcml/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "dcml/error.hpp"

namespace dcml {

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::InsufficientData, "quantile of empty sample");
  if (!(prob >= 0.0 && prob <= 1.0))
    throw Error(ErrorCode::InvalidParameter, "quantile probability outside [0, 1]");
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> quantiles(std::vector<double> sample, std::span<const double> probs) {
  std::sort(sample.begin(), sample.end());
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(quantile_sorted(sample, p));
  return out;
}

double median(std::vector<double> sample) {
  if (sample.empty()) throw Error(ErrorCode::InsufficientData, "median of empty sample");
  const std::size_t n = sample.size();
  auto mid = sample.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(sample.begin(), mid, sample.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(sample.begin(), mid);
  return 0.5 * (lower + upper);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InsufficientData, "KS on empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidParameter, "KS alpha must lie in (0, 1)");
  const double c = std::sqrt(-0.5 * std::log(0.5 * alpha));
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

double chi2_median(int p) {
  if (p <= 0) throw Error(ErrorCode::InvalidParameter, "chi2_median: p must be positive");
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(p)), 0.5);
}

}  // namespace dcml
