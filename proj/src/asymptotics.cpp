#include "dcml/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dcml/parallel.hpp"
#include "dcml/rng.hpp"
#include "dcml/stats.hpp"

namespace dcml {

const char* to_string(ErrorLaw law) noexcept {
  switch (law) {
    case ErrorLaw::Normal: return "normal";
    case ErrorLaw::Student3: return "t3";
    case ErrorLaw::Student5: return "t5";
    case ErrorLaw::Uniform: return "uniform";
  }
  return "?";
}

ErrorLaw parse_error_law(const std::string& text) {
  if (text == "normal" || text == "Normal") return ErrorLaw::Normal;
  if (text == "t3" || text == "Student3") return ErrorLaw::Student3;
  if (text == "t5" || text == "Student5") return ErrorLaw::Student5;
  if (text == "uniform" || text == "Uniform") return ErrorLaw::Uniform;
  throw Error(ErrorCode::InvalidDistribution, "unknown error distribution '" + text + "'");
}

bool AsymptoticV::is_psd(double tol) const {
  return v11 >= -tol && v22 >= -tol && v11 * v22 - v12 * v12 >= -tol * std::max(1.0, v11 * v22);
}

KernelConfig asymptotic_kernel() {
  static const double c1 = tuning_constant_for_efficiency(kMmEfficiency);
  KernelConfig cfg;
  cfg.c0 = kScaleTuning;
  cfg.c1 = c1;
  cfg.gamma = 0.5;
  return cfg;
}

namespace {

const double kSqrt3 = std::sqrt(3.0);

struct Law {
  ErrorLaw law;

  double pdf(double u) const {
    switch (law) {
      case ErrorLaw::Normal: return boost::math::pdf(boost::math::normal(), u);
      case ErrorLaw::Student3: return boost::math::pdf(boost::math::students_t(3.0), u);
      case ErrorLaw::Student5: return boost::math::pdf(boost::math::students_t(5.0), u);
      case ErrorLaw::Uniform: return std::abs(u) <= kSqrt3 ? 0.5 / kSqrt3 : 0.0;
    }
    return 0.0;
  }
  // P(u > x) for x >= 0.
  double upper_tail(double x) const {
    switch (law) {
      case ErrorLaw::Normal: return boost::math::cdf(boost::math::complement(boost::math::normal(), x));
      case ErrorLaw::Student3:
        return boost::math::cdf(boost::math::complement(boost::math::students_t(3.0), x));
      case ErrorLaw::Student5:
        return boost::math::cdf(boost::math::complement(boost::math::students_t(5.0), x));
      case ErrorLaw::Uniform: return x >= kSqrt3 ? 0.0 : 0.5 * (1.0 - x / kSqrt3);
    }
    return 0.0;
  }
  double support_end() const {
    return law == ErrorLaw::Uniform ? kSqrt3 : std::numeric_limits<double>::infinity();
  }
  double second_moment() const {
    switch (law) {
      case ErrorLaw::Normal: return 1.0;
      case ErrorLaw::Student3: return 3.0;
      case ErrorLaw::Student5: return 5.0 / 3.0;
      case ErrorLaw::Uniform: return 1.0;
    }
    return 0.0;
  }

  // E g(u) for an even g vanishing outside [-limit, limit].
  template <class G>
  double even_expectation(G g, double limit) const {
    const double b = std::min(limit, support_end());
    using boost::math::quadrature::gauss_kronrod;
    return 2.0 * gauss_kronrod<double, 61>::integrate(
                     [&](double u) { return g(u) * pdf(u); }, 0.0, b, 10, 1e-11);
  }
};

AsymptoticV assemble(double v11, double sigma0, double e_upsi, double e_dpsi, double e_psi2,
                     V22Form form) {
  if (!(e_dpsi > 0.0))
    throw Error(ErrorCode::InvalidDistribution, "v_matrix: E psi' is not positive");
  AsymptoticV v;
  v.v11 = v11;
  v.v12 = sigma0 * e_upsi / e_dpsi;
  v.v22 = sigma0 * sigma0 * e_psi2 / (form == V22Form::Squared ? e_dpsi * e_dpsi : e_dpsi);
  return v;
}

}  // namespace

double limit_scale(ErrorLaw law, const KernelConfig& cfg) {
  const Law f{law};
  auto mean_rho_at = [&](double s) {
    const double cut = cfg.c0 * s;
    return f.even_expectation([&](double u) { return rho_bisquare(u / s, cfg.c0); }, cut) +
           2.0 * f.upper_tail(cut);
  };
  double lo = 1e-3;
  double hi = 10.0;
  while (mean_rho_at(lo) < cfg.gamma) lo *= 0.5;
  while (mean_rho_at(hi) > cfg.gamma) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_rho_at(mid) > cfg.gamma)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

AsymptoticV v_matrix(ErrorLaw law, const KernelConfig& cfg, V22Form form) {
  const Law f{law};
  const double s0 = limit_scale(law, cfg);
  const double cut = cfg.c1 * s0;
  const double c1 = cfg.c1;
  const double e_upsi = f.even_expectation([&](double u) { return u * psi_bisquare(u / s0, c1); }, cut);
  const double e_dpsi = f.even_expectation([&](double u) { return psi_prime_bisquare(u / s0, c1); }, cut);
  const double e_psi2 = f.even_expectation(
      [&](double u) {
        const double v = psi_bisquare(u / s0, c1);
        return v * v;
      },
      cut);
  return assemble(f.second_moment(), s0, e_upsi, e_dpsi, e_psi2, form);
}

AsymptoticV v_matrix(std::span<const double> residuals, const KernelConfig& cfg, V22Form form) {
  const MScale ms = m_scale(residuals, cfg.c0, cfg.gamma);
  if (ms.degenerate || !(ms.value > 0.0))
    throw Error(ErrorCode::InvalidDistribution, "v_matrix: residual scale is zero");
  const double s0 = ms.value;
  double u2 = 0.0, upsi = 0.0, dpsi = 0.0, psi2 = 0.0;
  for (double u : residuals) {
    const double t = u / s0;
    const double v = psi_bisquare(t, cfg.c1);
    u2 += u * u;
    upsi += u * v;
    dpsi += psi_prime_bisquare(t, cfg.c1);
    psi2 += v * v;
  }
  const double n = static_cast<double>(residuals.size());
  if (!std::isfinite(u2)) throw Error(ErrorCode::InvalidDistribution, "v_matrix: infinite second moment");
  return assemble(u2 / n, s0, upsi / n, dpsi / n, psi2 / n, form);
}

std::vector<double> GvSample::first_coordinate() const {
  std::vector<double> out(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) out[static_cast<std::size_t>(j)] = draws(0, j);
  return out;
}

std::vector<double> GvSample::project(const Vector& d) const {
  if (d.size() != draws.rows())
    throw Error(ErrorCode::InvalidParameter, "project: direction has wrong length");
  const Vector v = draws.transpose() * d;
  return {v.data(), v.data() + v.size()};
}

GvSample sample_z3(const AsymptoticV& v, int p, std::size_t n_draws, std::uint64_t seed,
                   BlendForm form, unsigned threads) {
  if (p <= 0) throw Error(ErrorCode::InvalidParameter, "sample_z3: p must be positive");
  if (n_draws == 0) throw Error(ErrorCode::InvalidParameter, "sample_z3: need at least one draw");
  if (!v.is_psd()) throw Error(ErrorCode::InvalidMatrix, "sample_z3: V is not positive semidefinite");

  // z1 = a g1, z2 = b g1 + c g2 reproduces V exactly, including the
  // perfectly correlated case.
  const double a = std::sqrt(std::max(0.0, v.v11));
  const double b = a > 0.0 ? v.v12 / a : 0.0;
  const double c = std::sqrt(std::max(0.0, v.v22 - b * b));
  const double budget = 0.3 * p;

  GvSample out;
  out.p = p;
  out.draws.resize(p, static_cast<Eigen::Index>(n_draws));
  out.t_values.resize(n_draws);

  constexpr std::size_t kBlock = 1 << 16;
  const std::size_t n_blocks = (n_draws + kBlock - 1) / kBlock;
  std::vector<double> sum1(n_blocks), sum2(n_blocks), sum3(n_blocks);

  parallel_for(n_blocks, threads, [&](std::size_t block) {
    Engine rng = make_engine(derive_seed(seed, {0x7a33ULL, block}));
    std::normal_distribution<double> normal;
    Vector z1(p), z2(p);
    const std::size_t begin = block * kBlock;
    const std::size_t end = std::min(n_draws, begin + kBlock);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      for (int j = 0; j < p; ++j) {
        const double g1 = normal(rng);
        const double g2 = normal(rng);
        z1(j) = a * g1;
        z2(j) = b * g1 + c * g2;
      }
      const double dist = (z2 - z1).squaredNorm();
      double t = 1.0;
      if (dist > 0.0) {
        const double ratio = budget / dist;
        t = std::min(1.0, form == BlendForm::Printed ? ratio : std::sqrt(ratio));
      }
      auto col = out.draws.col(static_cast<Eigen::Index>(k));
      if (t == 1.0)
        col = z1;
      else
        col = t * z1 + (1.0 - t) * z2;
      out.t_values[k] = t;
      s1 += z1.squaredNorm();
      s2 += z2.squaredNorm();
      s3 += col.squaredNorm();
    }
    sum1[block] = s1;
    sum2[block] = s2;
    sum3[block] = s3;
  });

  const double n = static_cast<double>(n_draws);
  for (std::size_t block = 0; block < n_blocks; ++block) {
    out.mean_sq_z1 += sum1[block];
    out.mean_sq_z2 += sum2[block];
    out.mean_sq_z3 += sum3[block];
  }
  out.mean_sq_z1 /= n;
  out.mean_sq_z2 /= n;
  out.mean_sq_z3 /= n;
  return out;
}

std::vector<double> gv_quantiles(const GvSample& sample, std::span<const double> probs) {
  if (sample.size() == 0) throw Error(ErrorCode::InsufficientData, "gv_quantiles: empty sample");
  return quantiles(sample.first_coordinate(), probs);
}

AsymptoticEfficiencies asymptotic_efficiencies(const GvSample& sample) {
  if (!(sample.mean_sq_z3 > 0.0))
    throw Error(ErrorCode::Numerical, "asymptotic_efficiencies: degenerate sample");
  return {sample.mean_sq_z1 / sample.mean_sq_z3, sample.mean_sq_z2 / sample.mean_sq_z3};
}

double prob_equal_ls(const GvSample& sample) {
  if (sample.size() == 0) throw Error(ErrorCode::InsufficientData, "prob_equal_ls: empty sample");
  const auto ones = std::count(sample.t_values.begin(), sample.t_values.end(), 1.0);
  return static_cast<double>(ones) / static_cast<double>(sample.size());
}

std::vector<double> linear_combination_quantiles(const GvSample& sample, const Vector& b,
                                                 const Matrix& C, std::span<const double> probs) {
  if (C.rows() != b.size() || C.cols() != b.size())
    throw Error(ErrorCode::InvalidParameter, "linear_combination_quantiles: dimension mismatch");
  if (!C.isApprox(C.transpose(), 1e-10))
    throw Error(ErrorCode::InvalidMatrix, "linear_combination_quantiles: C is not symmetric");
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidMatrix, "linear_combination_quantiles: C is not positive definite");
  // ||C^(1/2) b||^2 = b' C b = ||L' b||^2
  const double scale = (llt.matrixU() * b).norm();
  std::vector<double> q = gv_quantiles(sample, probs);
  for (double& x : q) x *= scale;
  return q;
}

}  // namespace dcml
