#include "dcml/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dcml/rng.hpp"

namespace dcml {

void Dataset::validate() const {
  if (X.rows() != y.size())
    throw Error(ErrorCode::InvalidParameter, "dataset: X and y have different row counts");
  if (X.rows() == 0 || X.cols() == 0)
    throw Error(ErrorCode::InsufficientData, "dataset: empty design");
  if (!X.allFinite() || !y.allFinite())
    throw Error(ErrorCode::InvalidParameter, "dataset: non-finite entries");
  if (!column_names.empty() && static_cast<Eigen::Index>(column_names.size()) != X.cols())
    throw Error(ErrorCode::InvalidParameter, "dataset: column name count mismatch");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Eigen::Index i = rows[k];
    if (i < 0 || i >= X.rows())
      throw Error(ErrorCode::InvalidFilter, "dataset subset: row index out of range");
    out.X.row(static_cast<Eigen::Index>(k)) = X.row(i);
    out.y(static_cast<Eigen::Index>(k)) = y(i);
  }
  out.intercept = intercept;
  out.column_names = column_names;
  return out;
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::LS: return "LS";
    case Method::S: return "S";
    case Method::MM: return "MM";
    case Method::DCML: return "DCML";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "LS") return Method::LS;
  if (text == "S" || text == "S-E" || text == "SE") return Method::S;
  if (text == "MM") return Method::MM;
  if (text == "DCML") return Method::DCML;
  throw Error(ErrorCode::InvalidParameter, "unknown estimator '" + text + "'");
}

Vector residuals(const Dataset& data, const Vector& beta) {
  if (beta.size() != data.p())
    throw Error(ErrorCode::InvalidParameter, "residuals: coefficient length mismatch");
  return data.y - data.X * beta;
}

RegressionEstimate ls_fit(const Dataset& data) {
  data.validate();
  if (data.n() < data.p())
    throw Error(ErrorCode::SingularDesign, "ls_fit: fewer rows than columns");
  Eigen::ColPivHouseholderQR<Matrix> qr(data.X);
  if (qr.rank() < data.p()) throw Error(ErrorCode::SingularDesign, "ls_fit: rank-deficient design");
  RegressionEstimate est;
  est.beta = qr.solve(data.y);
  est.method = Method::LS;
  const Eigen::Index dof = data.n() - data.p();
  est.sigma = dof > 0 ? std::sqrt(residuals(data, est.beta).squaredNorm() / static_cast<double>(dof))
                      : 0.0;
  return est;
}

int default_subsamples(Eigen::Index p) {
  if (p <= 10) return 500;
  if (p <= 20) return 1000;
  return 2000;
}

namespace {

// Weighted least squares through the normal equations, falling back to a
// pivoted QR of sqrt(w) X when they are not numerically positive definite.
bool weighted_ls(const Matrix& X, const Vector& y, const Vector& w, Vector& beta) {
  const Matrix Xw = X.array().colwise() * w.array().sqrt();
  const Vector yw = y.array() * w.array().sqrt();
  Eigen::LLT<Matrix> llt(Xw.transpose() * Xw);
  if (llt.info() == Eigen::Success) {
    const Matrix& L = llt.matrixLLT();
    const double dmin = L.diagonal().minCoeff();
    const double dmax = L.diagonal().maxCoeff();
    if (dmin > 1e-7 * dmax) {
      beta = llt.solve(Xw.transpose() * yw);
      return beta.allFinite();
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
  if (qr.rank() < X.cols()) return false;
  beta = qr.solve(yw);
  return beta.allFinite();
}

Vector kernel_weights(const Vector& r, double sigma, double c) {
  Vector w(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) w(i) = weight_bisquare(r(i) / sigma, c);
  return w;
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

struct Candidate {
  Vector beta;
  double scale = 0.0;
  std::size_t index = 0;  // subsample draw number, for tie-breaking
};

bool better(const Candidate& a, const Candidate& b) {
  return a.scale < b.scale || (a.scale == b.scale && a.index < b.index);
}

}  // namespace

RegressionEstimate s_regression(const Dataset& data, const KernelConfig& cfg, int n_subsamples,
                                std::uint64_t seed, SubsampleTrace* trace) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (n <= p) throw Error(ErrorCode::InsufficientData, "s_regression: need n > p");
  if (!(cfg.c0 > 0.0) || !(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw Error(ErrorCode::InvalidParameter, "s_regression: invalid kernel configuration");
  if (n_subsamples <= 0) n_subsamples = default_subsamples(p);

  constexpr std::size_t kKeep = 5;
  constexpr int kRefineSteps = 50;

  const double y_scale = data.y.cwiseAbs().maxCoeff();
  const double zero_tol = 1e-10 * y_scale;
  auto exact_fit = [&](const Vector& r) {
    Eigen::Index zeros = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(r(i)) <= zero_tol) ++zeros;
    return 2 * zeros > n;
  };
  auto exact_estimate = [&](const Vector& beta, const Vector& r) {
    RegressionEstimate est;
    est.beta = beta;
    est.sigma = 0.0;
    est.method = Method::S;
    est.weights = Vector::Zero(n);
    const double wmax = weight_bisquare(0.0, cfg.c0);
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(r(i)) <= zero_tol) est.weights(i) = wmax;
    return est;
  };

  Engine rng = make_engine(seed);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});

  std::vector<Candidate> best;  // sorted ascending by (scale, index)
  Matrix Xs(p, p);
  Vector ys(p);
  std::size_t nonsingular = 0;

  for (int k = 0; k < n_subsamples; ++k) {
    draw_subset(rng, pool, static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
      Xs.row(j) = data.X.row(pool[static_cast<std::size_t>(j)]);
      ys(j) = data.y(pool[static_cast<std::size_t>(j)]);
    }
    Eigen::PartialPivLU<Matrix> lu(Xs);
    if (!(lu.rcond() > 1e-12)) {
      if (trace) ++trace->singular;
      continue;
    }
    Candidate cand;
    cand.beta = lu.solve(ys);
    cand.index = static_cast<std::size_t>(k);
    if (!cand.beta.allFinite()) {
      if (trace) ++trace->singular;
      continue;
    }
    ++nonsingular;
    const Vector r = data.y - data.X * cand.beta;
    if (exact_fit(r)) return exact_estimate(cand.beta, r);

    // A candidate whose mean rho at the current cutoff scale is >= gamma has
    // scale >= cutoff and cannot enter the list.
    if (!trace && best.size() == kKeep &&
        mean_rho(as_span(r), best.back().scale, cfg.c0) >= cfg.gamma)
      continue;

    const MScale s = m_scale(r, cfg.c0, cfg.gamma);
    cand.scale = s.value;
    if (trace) trace->raw_scales.push_back(s.value);
    if (best.size() == kKeep && !better(cand, best.back())) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), cand, better);
    best.insert(pos, std::move(cand));
    if (best.size() > kKeep) best.pop_back();
  }
  if (nonsingular == 0)
    throw Error(ErrorCode::SingularDesign, "s_regression: every subsample was singular");

  std::vector<Candidate> refined;
  refined.reserve(best.size());
  for (Candidate cand : best) {
    Vector r = data.y - data.X * cand.beta;
    for (int step = 0; step < kRefineSteps; ++step) {
      const Vector w = kernel_weights(r, cand.scale, cfg.c0);
      Vector beta_new;
      if (!weighted_ls(data.X, data.y, w, beta_new)) break;
      const Vector r_new = data.y - data.X * beta_new;
      if (exact_fit(r_new)) return exact_estimate(beta_new, r_new);
      const MScale s_new = m_scale(r_new, cfg.c0, cfg.gamma);
      if (s_new.degenerate || s_new.value > cand.scale) break;
      const double decrease = (cand.scale - s_new.value) / cand.scale;
      cand.beta = beta_new;
      cand.scale = s_new.value;
      r = r_new;
      if (decrease < 1e-10) break;
    }
    refined.push_back(std::move(cand));
  }
  const auto winner = std::min_element(refined.begin(), refined.end(), better);

  RegressionEstimate est;
  est.beta = winner->beta;
  est.sigma = winner->scale;
  est.method = Method::S;
  est.weights = kernel_weights(data.y - data.X * est.beta, est.sigma, cfg.c0);
  return est;
}

double mm_objective(const Dataset& data, const Vector& beta, double sigma, double c) {
  const Vector r = residuals(data, beta);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) sum += rho_bisquare(r(i) / sigma, c);
  return sum;
}

Vector mm_step(const Dataset& data, const Vector& beta, double sigma, double c) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParameter, "mm_step: scale must be positive");
  const Vector w = kernel_weights(residuals(data, beta), sigma, c);
  if (!(w.sum() > 0.0))
    throw Error(ErrorCode::DegenerateWeights, "mm_step: every observation has zero weight");
  Vector next;
  if (!weighted_ls(data.X, data.y, w, next))
    throw Error(ErrorCode::SingularDesign, "mm_step: weighted design is singular");
  return next;
}

RegressionEstimate mm_regression(const Dataset& data, const RegressionEstimate& init,
                                 const KernelConfig& cfg) {
  data.validate();
  if (init.beta.size() != data.p())
    throw Error(ErrorCode::InvalidParameter, "mm_regression: initial fit has wrong length");
  RegressionEstimate est = init;
  est.method = Method::MM;
  if (init.sigma == 0.0) return est;
  if (!(init.sigma > 0.0))
    throw Error(ErrorCode::InvalidParameter, "mm_regression: negative initial scale");

  constexpr int kMaxIter = 200;
  for (int it = 0; it < kMaxIter; ++it) {
    const Vector next = mm_step(data, est.beta, est.sigma, cfg.c1);
    const double change = (next - est.beta).norm() / std::max(1.0, est.beta.norm());
    est.beta = next;
    if (change < 1e-8) break;
  }
  est.weights = kernel_weights(residuals(data, est.beta), est.sigma, cfg.c1);
  return est;
}

Matrix weighted_design_cov(const Dataset& data, const RegressionEstimate& est,
                           const KernelConfig& cfg) {
  if (!(est.sigma > 0.0))
    throw Error(ErrorCode::InvalidParameter, "weighted_design_cov: scale must be positive");
  const Vector w = kernel_weights(residuals(data, est.beta), est.sigma, cfg.c1);
  const double total = w.sum();
  if (!(total > 0.0))
    throw Error(ErrorCode::DegenerateWeights, "weighted_design_cov: all weights are zero");
  const Matrix Xw = data.X.array().colwise() * w.array().sqrt();
  Matrix C = Xw.transpose() * Xw / total;
  return 0.5 * (C + C.transpose());
}

}  // namespace dcml
