#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcml/rho.hpp"
#include "dcml/types.hpp"

namespace dcml {

/// Error laws with closed-form densities used by the large-sample study.
/// `Uniform` has unit variance (support [-sqrt 3, sqrt 3]).
enum class ErrorLaw { Normal, Student3, Student5, Uniform };

const char* to_string(ErrorLaw law) noexcept;
ErrorLaw parse_error_law(const std::string& text);

/// Joint asymptotic covariance factor of (LS, MM):
/// [[v11, v12], [v12, v22]], so that (z1, z2) ~ N(0, V (x) C^-1).
struct AsymptoticV {
  double v11 = 0.0;
  double v12 = 0.0;
  double v22 = 0.0;

  bool is_psd(double tol = 1e-12) const;
};

/// Denominator of V22: E(psi')^2 (the sandwich form) or E(psi') as printed.
enum class V22Form { Squared, Printed };

/// Weight on z1 in z3 = t z1 + (1 - t) z2:
///   Printed:    t = min(1, 0.3 p / D)
///   SquareRoot: t = min(1, sqrt(0.3 p / D))
/// where D = ||z2 - z1||^2; t = 1 when D = 0.
enum class BlendForm { Printed, SquareRoot };

/// Kernel of the asymptotic study: c0 = 1.547, c1 at 85% efficiency and the
/// limiting gamma = 0.5.
KernelConfig asymptotic_kernel();

/// Limit of the M-scale (c0, gamma) for the error law, by quadrature.
double limit_scale(ErrorLaw law, const KernelConfig& cfg);

/// V by adaptive quadrature for a named error law.
AsymptoticV v_matrix(ErrorLaw law, const KernelConfig& cfg, V22Form form = V22Form::Squared);

/// V with expectations replaced by averages over `residuals`; sigma0 is
/// their M-scale.
AsymptoticV v_matrix(std::span<const double> residuals, const KernelConfig& cfg,
                     V22Form form = V22Form::Squared);

/// Draws of z3 for C = I.
struct GvSample {
  Matrix draws;               ///< p x n_draws, one z3 per column
  int p = 0;
  std::vector<double> t_values;
  double mean_sq_z1 = 0.0;    ///< average ||z1||^2
  double mean_sq_z2 = 0.0;    ///< average ||z2||^2
  double mean_sq_z3 = 0.0;    ///< average ||z3||^2

  std::size_t size() const { return t_values.size(); }
  std::vector<double> first_coordinate() const;
  /// d' z3 for every draw.
  std::vector<double> project(const Vector& d) const;
};

/// Samples (z1, z2) coordinatewise i.i.d. bivariate normal with covariance
/// V and applies the blend. Blocks of draws use independent streams derived
/// from `seed`, so the result does not depend on the thread count.
GvSample sample_z3(const AsymptoticV& v, int p, std::size_t n_draws, std::uint64_t seed,
                   BlendForm form = BlendForm::Printed, unsigned threads = 0);

/// Empirical quantiles (type 7) of the first coordinate of z3.
std::vector<double> gv_quantiles(const GvSample& sample, std::span<const double> probs);

struct AsymptoticEfficiencies {
  double eff_ls = 0.0;  ///< E||z1||^2 / E||z3||^2
  double eff_mm = 0.0;  ///< E||z2||^2 / E||z3||^2
};

AsymptoticEfficiencies asymptotic_efficiencies(const GvSample& sample);

/// Fraction of draws with t = 1, i.e. where the estimator equals LS.
double prob_equal_ls(const GvSample& sample);

/// Quantiles of b' z3 under a general C: the G_V quantiles scaled by
/// ||C^(1/2) b||. Throws InvalidMatrix unless C is SPD.
std::vector<double> linear_combination_quantiles(const GvSample& sample, const Vector& b,
                                                 const Matrix& C, std::span<const double> probs);

}  // namespace dcml
