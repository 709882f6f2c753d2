#pragma once

#include <cstdint>

#include "dcml/regression.hpp"

namespace dcml {

enum class DcmlVariant {
  /// beta = t beta_LS + (1 - t) beta_0 with t = min(1, sqrt(delta / d)).
  ConvexCombination,
  /// beta = (X'X + lambda C_w)^-1 (X'X beta_LS + lambda C_w beta_0), with
  /// lambda chosen so the constraint is active.
  LagrangeBlend,
};

const char* to_string(DcmlVariant v) noexcept;
DcmlVariant parse_variant(const std::string& text);

struct DcmlRegressionConfig {
  double delta = 0.0;
  DcmlVariant variant = DcmlVariant::ConvexCombination;
};

/// Constraint radius 0.3 p / n.
double delta_regression(int p, int n);

/// (beta2 - beta1)' C (beta2 - beta1) / sigma^2. Throws InvalidMatrix when C
/// is not symmetric positive definite.
double kl_regression(const Vector& beta1, const Vector& beta2, const Matrix& C, double sigma);

struct DcmlResult {
  RegressionEstimate estimate;
  double distance = 0.0;  ///< d_{C_w} between the initial fit and LS
  double t = 1.0;         ///< weight on beta_LS (ConvexCombination)
  double lambda = 0.0;    ///< multiplier (LagrangeBlend)
  /// LagrangeBlend could not use C_w and the convex combination was used.
  bool fell_back = false;
};

/// Distance-constrained ML fit: the LS coefficients if they lie inside the
/// KL ball of radius cfg.delta around init.beta (metric Cw, scale
/// init.sigma), otherwise the constrained blend toward init.beta.
DcmlResult dcml_fit(const Dataset& data, const RegressionEstimate& init, const Matrix& Cw,
                    const DcmlRegressionConfig& cfg);

/// Same, with the LS fit supplied by the caller.
DcmlResult dcml_fit(const Dataset& data, const RegressionEstimate& init, const Matrix& Cw,
                    const DcmlRegressionConfig& cfg, const RegressionEstimate& ls);

/// Every estimator of the regression pipeline on one dataset.
struct RegressionFits {
  RegressionEstimate ls;
  RegressionEstimate s;
  RegressionEstimate mm;
  DcmlResult dcml;
};

struct PipelineOptions {
  double efficiency = kMmEfficiency;
  int n_subsamples = 0;  ///< 0 selects default_subsamples(p)
  DcmlVariant variant = DcmlVariant::ConvexCombination;
  double delta_constant = 0.3;  ///< delta = delta_constant * p / n
};

/// LS, S, MM (initialized at S) and DCML (around MM) for `data`; p counts
/// every column of X including the intercept.
RegressionFits fit_regression_pipeline(const Dataset& data, std::uint64_t seed,
                                       const PipelineOptions& options = {});

}  // namespace dcml
