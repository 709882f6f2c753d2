#pragma once

#include <string>

#include "dcml/multivariate.hpp"

namespace dcml {

enum class Target { Scatter, Location };

const char* to_string(Target t) noexcept;
Target parse_target(const std::string& text);

struct DcmlMultivariateConfig {
  double delta_sigma = 0.0;
  double delta_mu = 0.0;

  /// Both radii from delta_multivariate.
  static DcmlMultivariateConfig for_sample(int p, int n);
};

/// Power-law radius a n^-b p^c with (a, b, c) = (1.02, 0.82, 0.18) for the
/// scatter and (0.55, 0.88, -0.30) for the location.
double delta_multivariate(int p, int n, Target target);

/// log|sigma| - log|sigma0| + trace(sigma^-1 sigma0) - p.
double kl_scatter(const Matrix& sigma0, const Matrix& sigma);

/// (mu - mu0)' sigma^-1 (mu - mu0).
double kl_location(const Vector& mu0, const Vector& mu, const Matrix& sigma);

struct ScatterBlend {
  Matrix sigma;
  double t = 0.0;  ///< weight on the robust scatter
};

/// (1 - t) sigma_ml + t sigma0 with t = 0 when kl_scatter(sigma0, sigma_ml)
/// <= delta, otherwise the t in (0, 1) that puts the blend on the boundary.
ScatterBlend dcml_scatter(const Matrix& sigma_ml, const Matrix& sigma0, double delta);

struct LocationBlend {
  Vector mu;
  double t = 1.0;  ///< weight on the sample mean
};

/// t xbar + (1 - t) mu0 with t = min(1, sqrt(delta / d0)) and
/// d0 = (xbar - mu0)' sigma0^-1 (xbar - mu0).
LocationBlend dcml_location(const Vector& xbar, const Vector& mu0, const Matrix& sigma0,
                            double delta);

/// Classical, S and DCML estimates computed on one sample.
struct MultivariateFits {
  LocationScatter ml;
  LocationScatter s;
  LocationScatter dcml;
  double t_sigma = 0.0;
  double t_mu = 1.0;
};

MultivariateFits fit_multivariate_pipeline(const Matrix& obs, std::uint64_t seed,
                                           int n_subsamples = 0);

}  // namespace dcml
