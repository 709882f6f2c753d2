#include "dcml/dcml_multivariate.hpp"

#include <algorithm>
#include <cmath>

namespace dcml {

const char* to_string(Target t) noexcept { return t == Target::Scatter ? "Sigma" : "mu"; }

Target parse_target(const std::string& text) {
  if (text == "Scatter" || text == "scatter" || text == "Sigma" || text == "sigma")
    return Target::Scatter;
  if (text == "Location" || text == "location" || text == "mu") return Target::Location;
  throw Error(ErrorCode::InvalidParameter, "unknown target '" + text + "'");
}

DcmlMultivariateConfig DcmlMultivariateConfig::for_sample(int p, int n) {
  return {delta_multivariate(p, n, Target::Scatter), delta_multivariate(p, n, Target::Location)};
}

double delta_multivariate(int p, int n, Target target) {
  if (p <= 0 || n <= 0) throw Error(ErrorCode::InvalidParameter, "delta_multivariate: p, n > 0");
  const auto [a, b, c] = target == Target::Scatter ? std::tuple{1.02, 0.82, 0.18}
                                                   : std::tuple{0.55, 0.88, -0.30};
  return a * std::pow(static_cast<double>(n), -b) * std::pow(static_cast<double>(p), c);
}

namespace {

Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorCode::InvalidMatrix, std::string(what) + ": matrix is not square");
  if (!m.allFinite()) throw Error(ErrorCode::InvalidMatrix, std::string(what) + ": non-finite matrix");
  if (!m.isApprox(m.transpose(), 1e-10))
    throw Error(ErrorCode::InvalidMatrix, std::string(what) + ": matrix is not symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0))
    throw Error(ErrorCode::InvalidMatrix, std::string(what) + ": matrix is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Divergence of the blend (1 - t) sigma_ml + t sigma0 from sigma0 in terms of
// the eigenvalues g_j of sigma0^-1 sigma_ml:
//   sum_j log(b_j) + 1 / b_j - 1,  b_j = (1 - t) g_j + t.
double blend_divergence(const Vector& g, double t) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double b = (1.0 - t) * g(j) + t;
    sum += std::log(b) + 1.0 / b - 1.0;
  }
  return std::max(0.0, sum);
}

}  // namespace

double kl_scatter(const Matrix& sigma0, const Matrix& sigma) {
  const auto llt0 = spd_factor(sigma0, "kl_scatter");
  const auto llt = spd_factor(sigma, "kl_scatter");
  if (sigma0.rows() != sigma.rows())
    throw Error(ErrorCode::InvalidMatrix, "kl_scatter: dimension mismatch");
  if (sigma0 == sigma) return 0.0;
  const double p = static_cast<double>(sigma.rows());
  // trace(sigma^-1 sigma0) = ||L^-1 L0||_F^2
  Matrix m = llt0.matrixL();
  llt.matrixL().solveInPlace(m);
  const double value = log_det(llt) - log_det(llt0) + m.squaredNorm() - p;
  return std::max(0.0, value);
}

double kl_location(const Vector& mu0, const Vector& mu, const Matrix& sigma) {
  const auto llt = spd_factor(sigma, "kl_location");
  if (mu0.size() != sigma.rows() || mu.size() != sigma.rows())
    throw Error(ErrorCode::InvalidParameter, "kl_location: dimension mismatch");
  Vector z = mu - mu0;
  llt.matrixL().solveInPlace(z);
  return z.squaredNorm();
}

ScatterBlend dcml_scatter(const Matrix& sigma_ml, const Matrix& sigma0, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidParameter, "dcml_scatter: delta must be > 0");
  const double d0 = kl_scatter(sigma0, sigma_ml);
  if (d0 <= delta) return {sigma_ml, 0.0};

  // Eigenvalues of sigma0^-1 sigma_ml via the symmetric form L0^-1 S L0^-T.
  const auto llt0 = spd_factor(sigma0, "dcml_scatter");
  Matrix m = sigma_ml;
  llt0.matrixL().solveInPlace(m);
  Matrix sym = m.transpose();
  llt0.matrixL().solveInPlace(sym);
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const Vector g = eig.eigenvalues().cwiseMax(1e-300);

  // Divergence falls from d0 at t = 0 to 0 at t = 1; keep the feasible end.
  double lo = 0.0;
  double hi = 1.0;
  int it = 0;
  for (; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (blend_divergence(g, mid) > delta)
      lo = mid;
    else
      hi = mid;
  }
  if (hi - lo > 1e-12) throw Error(ErrorCode::Numerical, "dcml_scatter: root search did not converge");
  ScatterBlend out;
  out.t = hi;
  out.sigma = (1.0 - hi) * sigma_ml + hi * sigma0;
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  return out;
}

LocationBlend dcml_location(const Vector& xbar, const Vector& mu0, const Matrix& sigma0,
                            double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidParameter, "dcml_location: delta must be > 0");
  const double d0 = kl_location(mu0, xbar, sigma0);
  LocationBlend out;
  out.t = d0 > 0.0 ? std::min(1.0, std::sqrt(delta / d0)) : 1.0;
  out.mu = out.t * xbar + (1.0 - out.t) * mu0;
  return out;
}

MultivariateFits fit_multivariate_pipeline(const Matrix& obs, std::uint64_t seed,
                                           int n_subsamples) {
  const int n = static_cast<int>(obs.rows());
  const int p = static_cast<int>(obs.cols());
  MultivariateFits fits;
  fits.ml = sample_mean_cov(obs);
  fits.s = s_estimate(obs, n_subsamples, seed);
  const auto cfg = DcmlMultivariateConfig::for_sample(p, n);
  const ScatterBlend sb = dcml_scatter(fits.ml.sigma, fits.s.sigma, cfg.delta_sigma);
  const LocationBlend lb = dcml_location(fits.ml.mu, fits.s.mu, fits.s.sigma, cfg.delta_mu);
  fits.dcml.mu = lb.mu;
  fits.dcml.sigma = sb.sigma;
  fits.t_sigma = sb.t;
  fits.t_mu = lb.t;
  return fits;
}

}  // namespace dcml
