#pragma once

#include <span>
#include <vector>

namespace dcml {

/// Sample quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be ascending and nonempty.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Quantiles of an unsorted sample; `probs` in [0, 1].
std::vector<double> quantiles(std::vector<double> sample, std::span<const double> probs);

/// Median (mean of the two central values for even sizes).
double median(std::vector<double> sample);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample KS critical value c(alpha) sqrt((n + m) / (n m)).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

/// Median of the chi-squared distribution with p degrees of freedom.
double chi2_median(int p);

}  // namespace dcml
