#include "dcml/dcml_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcml {

const char* to_string(DcmlVariant v) noexcept {
  return v == DcmlVariant::ConvexCombination ? "convex" : "lagrange";
}

DcmlVariant parse_variant(const std::string& text) {
  if (text == "convex" || text == "ConvexCombination") return DcmlVariant::ConvexCombination;
  if (text == "lagrange" || text == "LagrangeBlend") return DcmlVariant::LagrangeBlend;
  throw Error(ErrorCode::InvalidParameter, "unknown DCML variant '" + text + "'");
}

double delta_regression(int p, int n) {
  if (p <= 0 || n <= 0) throw Error(ErrorCode::InvalidParameter, "delta_regression: p, n > 0");
  return 0.3 * static_cast<double>(p) / static_cast<double>(n);
}

namespace {

double quad_form(const Vector& d, const Matrix& C) { return d.dot(C * d); }

}  // namespace

double kl_regression(const Vector& beta1, const Vector& beta2, const Matrix& C, double sigma) {
  if (beta1.size() != beta2.size() || C.rows() != beta1.size() || C.cols() != beta1.size())
    throw Error(ErrorCode::InvalidParameter, "kl_regression: dimension mismatch");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParameter, "kl_regression: sigma must be > 0");
  if (!C.isApprox(C.transpose(), 1e-10))
    throw Error(ErrorCode::InvalidMatrix, "kl_regression: C is not symmetric");
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidMatrix, "kl_regression: C is not positive definite");
  const Vector d = beta2 - beta1;
  // ||L' d||^2 keeps the value nonnegative under rounding.
  const Vector Ld = llt.matrixU() * d;
  return Ld.squaredNorm() / (sigma * sigma);
}

DcmlResult dcml_fit(const Dataset& data, const RegressionEstimate& init, const Matrix& Cw,
                    const DcmlRegressionConfig& cfg) {
  return dcml_fit(data, init, Cw, cfg, ls_fit(data));
}

DcmlResult dcml_fit(const Dataset& data, const RegressionEstimate& init, const Matrix& Cw,
                    const DcmlRegressionConfig& cfg, const RegressionEstimate& ls) {
  if (!(cfg.delta > 0.0)) throw Error(ErrorCode::InvalidParameter, "dcml_fit: delta must be > 0");
  if (!(init.sigma > 0.0))
    throw Error(ErrorCode::InvalidParameter, "dcml_fit: initial scale must be positive");
  const Eigen::Index p = data.p();
  if (init.beta.size() != p || ls.beta.size() != p || Cw.rows() != p || Cw.cols() != p)
    throw Error(ErrorCode::InvalidParameter, "dcml_fit: dimension mismatch");

  const double s2 = init.sigma * init.sigma;
  const Vector diff = ls.beta - init.beta;

  DcmlResult out;
  out.estimate.sigma = init.sigma;
  out.estimate.weights = init.weights;
  out.estimate.method = Method::DCML;
  out.distance = std::max(0.0, quad_form(diff, Cw)) / s2;

  if (out.distance <= cfg.delta) {
    out.estimate.beta = ls.beta;
    out.t = 1.0;
    return out;
  }

  auto convex = [&] {
    out.t = std::min(1.0, std::sqrt(cfg.delta / out.distance));
    out.estimate.beta = out.t * ls.beta + (1.0 - out.t) * init.beta;
  };

  if (cfg.variant == DcmlVariant::ConvexCombination) {
    convex();
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(Cw, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success ||
      !(eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))) {
    out.fell_back = true;
    convex();
    return out;
  }

  const Matrix XtX = data.X.transpose() * data.X;
  const Vector rhs_ls = XtX * ls.beta;
  const Vector rhs_0 = Cw * init.beta;
  auto blend = [&](double lambda) -> Vector {
    Eigen::LLT<Matrix> llt(XtX + lambda * Cw);
    return llt.solve(rhs_ls + lambda * rhs_0);
  };
  auto distance_at = [&](const Vector& beta) {
    return std::max(0.0, quad_form(beta - init.beta, Cw)) / s2;
  };

  // The constrained distance decreases monotonically in lambda.
  double lo = 0.0;
  double hi = static_cast<double>(data.n());
  Vector beta_hi = blend(hi);
  for (int k = 0; k < 200 && distance_at(beta_hi) > cfg.delta; ++k) {
    lo = hi;
    hi *= 2.0;
    beta_hi = blend(hi);
  }
  for (int it = 0; it < 300; ++it) {
    const double gap = distance_at(beta_hi) - cfg.delta;
    if (std::abs(gap) <= 1e-10 * cfg.delta || hi - lo <= 1e-15 * hi) break;
    const double mid = 0.5 * (lo + hi);
    const Vector beta_mid = blend(mid);
    if (distance_at(beta_mid) > cfg.delta) {
      lo = mid;
    } else {
      hi = mid;
      beta_hi = beta_mid;
    }
  }
  out.lambda = hi;
  out.estimate.beta = beta_hi;
  out.t = std::numeric_limits<double>::quiet_NaN();
  return out;
}

RegressionFits fit_regression_pipeline(const Dataset& data, std::uint64_t seed,
                                       const PipelineOptions& options) {
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  const KernelConfig cfg = KernelConfig::regression(p, n, options.efficiency);
  RegressionFits fits;
  fits.ls = ls_fit(data);
  fits.s = s_regression(data, cfg, options.n_subsamples, seed);
  fits.mm = mm_regression(data, fits.s, cfg);
  if (fits.mm.sigma > 0.0) {
    const Matrix Cw = weighted_design_cov(data, fits.mm, cfg);
    DcmlRegressionConfig dcfg;
    dcfg.delta = options.delta_constant * static_cast<double>(p) / static_cast<double>(n);
    dcfg.variant = options.variant;
    fits.dcml = dcml_fit(data, fits.mm, Cw, dcfg, fits.ls);
  } else {
    // Exact fit: the robust fit already interpolates most of the data.
    fits.dcml.estimate = fits.mm;
    fits.dcml.estimate.method = Method::DCML;
    fits.dcml.t = 0.0;
  }
  return fits;
}

}  // namespace dcml
