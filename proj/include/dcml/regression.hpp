#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcml/rho.hpp"
#include "dcml/types.hpp"

namespace dcml {

/// Design matrix and response of a linear model y = X beta + e.
struct Dataset {
  Matrix X;  ///< n x p; first column all ones when `intercept` is set
  Vector y;  ///< length n
  bool intercept = false;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Shape agreement and finiteness; throws InvalidParameter.
  void validate() const;

  /// Rows selected by zero-based index, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

enum class Method { LS, S, MM, DCML };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& text);

struct RegressionEstimate {
  Vector beta;
  double sigma = 0.0;
  Vector weights;  ///< W(r_i / sigma); empty for LS
  Method method = Method::LS;
};

/// r_i = y_i - x_i' beta.
Vector residuals(const Dataset& data, const Vector& beta);

/// Least squares via column-pivoted QR. sigma uses the n - p denominator
/// (0 when n == p). Throws SingularDesign when X is rank deficient.
RegressionEstimate ls_fit(const Dataset& data);

/// Subsample count used when callers pass 0: 500 up to 10 coefficients,
/// 1000 up to 20, 2000 beyond.
int default_subsamples(Eigen::Index p);

/// Optional record of the raw elemental candidates examined by s_regression.
struct SubsampleTrace {
  std::vector<double> raw_scales;  ///< M-scale of each nonsingular raw candidate
  std::size_t singular = 0;
};

/// Regression S-estimator with bisquare rho(., cfg.c0) and right-hand side
/// cfg.gamma.
///
/// Draws `n_subsamples` random p-point subsets, fits each exactly, keeps the
/// five with smallest M-scale (ties to the lowest subsample index) and
/// refines each with up to 50 reweighting steps that never increase the
/// scale. When more than half of the residuals of a candidate vanish the
/// candidate is returned with sigma = 0. Deterministic given `seed`.
RegressionEstimate s_regression(const Dataset& data, const KernelConfig& cfg,
                                int n_subsamples, std::uint64_t seed,
                                SubsampleTrace* trace = nullptr);

/// sum_i rho(r_i / sigma, c).
double mm_objective(const Dataset& data, const Vector& beta, double sigma, double c);

/// One reweighting step for the MM equations: weights W(r_i / sigma, c) at
/// `beta`, then weighted least squares.
Vector mm_step(const Dataset& data, const Vector& beta, double sigma, double c);

/// MM-estimator: iterates mm_step with c = cfg.c1, keeping init.sigma fixed,
/// until the relative change of beta drops below 1e-8 or 200 iterations.
/// With init.sigma == 0 the initial fit is returned as is (tagged MM).
RegressionEstimate mm_regression(const Dataset& data, const RegressionEstimate& init,
                                 const KernelConfig& cfg);

/// C_w = sum w_i x_i x_i' / sum w_i with w_i = W(r_i(beta) / sigma, cfg.c1).
Matrix weighted_design_cov(const Dataset& data, const RegressionEstimate& est,
                           const KernelConfig& cfg);

}  // namespace dcml
