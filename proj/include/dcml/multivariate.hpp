#pragma once

#include <cstdint>

#include "dcml/rho.hpp"
#include "dcml/types.hpp"

namespace dcml {

/// Location vector and symmetric positive definite scatter matrix.
struct LocationScatter {
  Vector mu;
  Matrix sigma;

  /// Throws InvalidMatrix unless sigma is square, matches mu, is symmetric
  /// within 1e-12 (relative) and positive definite.
  void validate() const;
};

/// Column means and the covariance with denominator n. Throws
/// InsufficientData when n <= p and DegenerateData when the covariance is
/// singular.
LocationScatter sample_mean_cov(const Matrix& obs);

/// (x - mu)' sigma^-1 (x - mu) via a Cholesky factor.
double mahalanobis_sq(const Vector& x, const LocationScatter& ls);

/// Squared distances of every row of `obs`.
Vector mahalanobis_sq_rows(const Matrix& obs, const Vector& mu, const Matrix& sigma);

struct SScatter {
  LocationScatter shape;  ///< det(shape.sigma) == 1
  double scale = 0.0;     ///< M-scale of the distances d_i^(1/2)
};

/// Bisquare S-estimator of multivariate location and shape.
///
/// Minimizes the M-scale (constant cfg.c0, right-hand side cfg.gamma) of the
/// square-root Mahalanobis distances over location t and det-one shapes V.
/// Candidates come from `n_subsamples` random (p+1)-point subsets; the five
/// smallest are refined by reweighting steps that do not increase the scale.
/// Deterministic given `seed`.
SScatter s_multivariate(const Matrix& obs, const KernelConfig& cfg, int n_subsamples,
                        std::uint64_t seed);

/// sigma_tilde * median_i d(x_i, mu0, sigma_tilde) / median(chi2_p).
LocationScatter consistency_rescale(const Matrix& obs, const Vector& mu0,
                                    const Matrix& sigma_tilde);

/// s_multivariate with KernelConfig::multivariate(p, n) followed by
/// consistency_rescale.
LocationScatter s_estimate(const Matrix& obs, int n_subsamples, std::uint64_t seed);

}  // namespace dcml
