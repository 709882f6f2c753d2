#include "dcml/multivariate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dcml/regression.hpp"
#include "dcml/rng.hpp"
#include "dcml/stats.hpp"

namespace dcml {

void LocationScatter::validate() const {
  const Eigen::Index p = mu.size();
  if (sigma.rows() != p || sigma.cols() != p || p == 0)
    throw Error(ErrorCode::InvalidMatrix, "location/scatter: dimension mismatch");
  if (!sigma.allFinite() || !mu.allFinite())
    throw Error(ErrorCode::InvalidMatrix, "location/scatter: non-finite entries");
  const double tol = 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > tol)
    throw Error(ErrorCode::InvalidMatrix, "location/scatter: scatter is not symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidMatrix, "location/scatter: scatter is not positive definite");
}

LocationScatter sample_mean_cov(const Matrix& obs) {
  const Eigen::Index n = obs.rows();
  const Eigen::Index p = obs.cols();
  if (p == 0 || n <= p) throw Error(ErrorCode::InsufficientData, "sample_mean_cov: need n > p");
  if (!obs.allFinite()) throw Error(ErrorCode::InvalidParameter, "sample_mean_cov: non-finite data");
  LocationScatter out;
  out.mu = obs.colwise().mean().transpose();
  const Matrix centered = obs.rowwise() - out.mu.transpose();
  out.sigma = centered.transpose() * centered / static_cast<double>(n);
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  Eigen::LLT<Matrix> llt(out.sigma);
  const double scale = std::max(out.sigma.diagonal().maxCoeff(), 0.0);
  if (llt.info() != Eigen::Success || !(scale > 0.0) ||
      !(llt.matrixLLT().diagonal().minCoeff() > 1e-7 * std::sqrt(scale)))
    throw Error(ErrorCode::DegenerateData, "sample_mean_cov: covariance is singular");
  return out;
}

Vector mahalanobis_sq_rows(const Matrix& obs, const Vector& mu, const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidMatrix, "mahalanobis: scatter is not positive definite");
  Matrix diff = (obs.rowwise() - mu.transpose()).transpose();
  llt.matrixL().solveInPlace(diff);
  return diff.colwise().squaredNorm().transpose();
}

double mahalanobis_sq(const Vector& x, const LocationScatter& ls) {
  ls.validate();
  if (x.size() != ls.mu.size())
    throw Error(ErrorCode::InvalidParameter, "mahalanobis: dimension mismatch");
  Eigen::LLT<Matrix> llt(ls.sigma);
  Vector z = x - ls.mu;
  llt.matrixL().solveInPlace(z);
  return z.squaredNorm();
}

namespace {

struct Shape {
  Vector mu;
  Matrix V;        // det 1
  Vector root_d;   // sqrt of squared distances under (mu, V)
  double scale = 0.0;
  std::size_t index = 0;
};

bool better(const Shape& a, const Shape& b) {
  return a.scale < b.scale || (a.scale == b.scale && a.index < b.index);
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Normalizes `cov` to determinant one and fills distances; false when `cov`
// is numerically singular.
bool set_shape(const Matrix& obs, const Vector& mu, const Matrix& cov, Shape& out) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) return false;
  const Vector diag = llt.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 1e-9 * diag.maxCoeff())) return false;
  const double p = static_cast<double>(cov.rows());
  const double log_det = 2.0 * diag.array().log().sum();
  const double factor = std::exp(-log_det / p);
  Matrix diff = (obs.rowwise() - mu.transpose()).transpose();
  llt.matrixL().solveInPlace(diff);
  out.mu = mu;
  out.V = factor * cov;
  out.V = 0.5 * (out.V + out.V.transpose());
  // d under V = d under cov / factor.
  out.root_d = (diff.colwise().squaredNorm().transpose() / factor).array().sqrt();
  return out.root_d.allFinite();
}

bool reweight(const Matrix& obs, const Shape& current, const KernelConfig& cfg, Shape& next) {
  const Eigen::Index n = obs.rows();
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = weight_bisquare(current.root_d(i) / current.scale, cfg.c0);
  const double total = w.sum();
  if (!(total > 0.0)) return false;
  const Vector mu = (obs.transpose() * w) / total;
  const Matrix centered = obs.rowwise() - mu.transpose();
  const Matrix cw = centered.array().colwise() * w.array().sqrt();
  const Matrix cov = cw.transpose() * cw / total;
  if (!set_shape(obs, mu, cov, next)) return false;
  const MScale s = m_scale(next.root_d, cfg.c0, cfg.gamma);
  if (s.degenerate) return false;
  next.scale = s.value;
  next.index = current.index;
  return true;
}

// Reweights until the scale stops decreasing; never returns a worse shape.
void refine(const Matrix& obs, const KernelConfig& cfg, Shape& shape, int max_steps,
            double rel_tol) {
  for (int step = 0; step < max_steps; ++step) {
    Shape next;
    if (!reweight(obs, shape, cfg, next) || next.scale > shape.scale) return;
    const double decrease = (shape.scale - next.scale) / shape.scale;
    shape = std::move(next);
    if (decrease < rel_tol) return;
  }
}

}  // namespace

SScatter s_multivariate(const Matrix& obs, const KernelConfig& cfg, int n_subsamples,
                        std::uint64_t seed) {
  const Eigen::Index n = obs.rows();
  const Eigen::Index p = obs.cols();
  if (p == 0 || n <= p + 1)
    throw Error(ErrorCode::InsufficientData, "s_multivariate: need n > p + 1");
  if (!obs.allFinite()) throw Error(ErrorCode::InvalidParameter, "s_multivariate: non-finite data");
  if (!(cfg.c0 > 0.0) || !(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw Error(ErrorCode::InvalidParameter, "s_multivariate: invalid kernel configuration");
  if (n_subsamples <= 0) n_subsamples = default_subsamples(p);

  constexpr std::size_t kKeep = 5;
  const auto k = static_cast<std::size_t>(p + 1);

  Engine rng = make_engine(seed);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  Matrix sub(static_cast<Eigen::Index>(k), p);

  std::vector<Shape> best;
  for (int draw = 0; draw < n_subsamples; ++draw) {
    draw_subset(rng, pool, k);
    for (std::size_t j = 0; j < k; ++j) sub.row(static_cast<Eigen::Index>(j)) = obs.row(pool[j]);
    const Vector mu = sub.colwise().mean().transpose();
    const Matrix centered = sub.rowwise() - mu.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(k - 1);
    Shape cand;
    if (!set_shape(obs, mu, cov, cand)) continue;
    cand.index = static_cast<std::size_t>(draw);
    if (best.size() == kKeep && mean_rho(as_span(cand.root_d), best.back().scale, cfg.c0) >= cfg.gamma)
      continue;
    const MScale s = m_scale(cand.root_d, cfg.c0, cfg.gamma);
    if (s.degenerate) continue;
    cand.scale = s.value;
    if (best.size() == kKeep && !better(cand, best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), cand, better), std::move(cand));
    if (best.size() > kKeep) best.pop_back();
  }
  if (best.empty())
    throw Error(ErrorCode::DegenerateData, "s_multivariate: every subsample was singular");

  for (Shape& cand : best) refine(obs, cfg, cand, 50, 1e-10);
  Shape winner = *std::min_element(best.begin(), best.end(), better);
  refine(obs, cfg, winner, 500, 1e-13);

  SScatter out;
  out.shape.mu = winner.mu;
  out.shape.sigma = winner.V;
  out.scale = winner.scale;
  return out;
}

LocationScatter consistency_rescale(const Matrix& obs, const Vector& mu0,
                                    const Matrix& sigma_tilde) {
  const Vector d = mahalanobis_sq_rows(obs, mu0, sigma_tilde);
  const double factor =
      median(std::vector<double>(d.data(), d.data() + d.size())) / chi2_median(static_cast<int>(obs.cols()));
  if (!(factor > 0.0))
    throw Error(ErrorCode::DegenerateData, "consistency_rescale: median distance is zero");
  LocationScatter out;
  out.mu = mu0;
  out.sigma = factor * sigma_tilde;
  return out;
}

LocationScatter s_estimate(const Matrix& obs, int n_subsamples, std::uint64_t seed) {
  const KernelConfig cfg =
      KernelConfig::multivariate(static_cast<int>(obs.cols()), static_cast<int>(obs.rows()));
  const SScatter s = s_multivariate(obs, cfg, n_subsamples, seed);
  return consistency_rescale(obs, s.shape.mu, s.shape.sigma);
}

}  // namespace dcml
