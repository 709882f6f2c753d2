#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "dcml/regression.hpp"

using namespace dcml;

namespace {

Dataset linear_data(int n, int p, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Dataset d;
  d.intercept = true;
  d.X.resize(n, p);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) d.X(i, j) = normal(rng);
    d.y(i) = noise * normal(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("ls_fit") {
  Dataset d = linear_data(40, 4, 1);
  const Vector beta0 = (Vector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  d.y = d.X * beta0;
  const RegressionEstimate exact = ls_fit(d);
  CHECK((exact.beta - beta0).norm() < 1e-10);

  Dataset sq = linear_data(3, 3, 2);
  CHECK(residuals(sq, ls_fit(sq).beta).norm() < 1e-10);
  CHECK(ls_fit(sq).sigma == 0.0);

  Dataset noisy = linear_data(60, 3, 3);
  const RegressionEstimate ls = ls_fit(noisy);
  CHECK((noisy.X.transpose() * residuals(noisy, ls.beta)).norm() < 1e-8);
  CHECK(ls.sigma == doctest::Approx(std::sqrt(residuals(noisy, ls.beta).squaredNorm() / 57.0)));

  Dataset rank = noisy;
  rank.X.col(2) = 2.0 * rank.X.col(1);
  CHECK_THROWS_AS(ls_fit(rank), Error);
  try {
    ls_fit(rank);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
}

TEST_CASE("residuals") {
  Dataset d = linear_data(10, 2, 4);
  CHECK(residuals(d, Vector::Zero(2)) == d.y);
  Dataset one;
  one.X = Matrix::Constant(1, 1, 2.0);
  one.y = Vector::Constant(1, 5.0);
  CHECK(residuals(one, Vector::Constant(1, 2.0))(0) == 1.0);
}

TEST_CASE("s_regression: exact fit") {
  Dataset d = linear_data(30, 3, 5);
  const Vector beta0 = (Vector(3) << 2.0, 1.0, -1.0).finished();
  d.y = d.X * beta0;
  const KernelConfig cfg = KernelConfig::regression(3, 30);
  const RegressionEstimate s = s_regression(d, cfg, 50, 1);
  CHECK(s.sigma == 0.0);
  CHECK((s.beta - beta0).norm() < 1e-8);
  const RegressionEstimate mm = mm_regression(d, s, cfg);
  CHECK(mm.method == Method::MM);
  CHECK(mm.beta == s.beta);
}

TEST_CASE("s_regression resists outliers") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  Dataset d;
  d.X.resize(50, 2);
  d.y.resize(50);
  for (int i = 0; i < 50; ++i) {
    const double x = normal(rng);
    d.X(i, 0) = 1.0;
    d.X(i, 1) = x;
    d.y(i) = i < 10 ? 100.0 : 1.0 + 2.0 * x + normal(rng);
  }
  const KernelConfig cfg = KernelConfig::regression(2, 50);
  const RegressionEstimate s = s_regression(d, cfg, 500, 9);
  const Vector truth = (Vector(2) << 1.0, 2.0).finished();
  CHECK((s.beta - truth).norm() < 0.5);
  CHECK((ls_fit(d).beta - truth).norm() > 5.0);
}

TEST_CASE("s_regression objective dominance and determinism") {
  const Dataset d = linear_data(60, 4, 6);
  const KernelConfig cfg = KernelConfig::regression(4, 60);
  SubsampleTrace trace;
  const RegressionEstimate s = s_regression(d, cfg, 300, 42, &trace);
  REQUIRE(!trace.raw_scales.empty());
  const double s_at = m_scale(residuals(d, s.beta), cfg.c0, cfg.gamma).value;
  CHECK(s_at == doctest::Approx(s.sigma).epsilon(1e-9));
  for (double raw : trace.raw_scales) CHECK(s.sigma <= raw * (1 + 1e-12));
  const RegressionEstimate again = s_regression(d, cfg, 300, 42);
  CHECK(again.beta == s.beta);
  CHECK(again.sigma == s.sigma);
  const double wmax = weight_bisquare(0.0, cfg.c0);
  CHECK(s.weights.minCoeff() >= 0.0);
  CHECK(s.weights.maxCoeff() <= wmax);
  CHECK_THROWS_AS(s_regression(linear_data(3, 3, 1), cfg, 10, 1), Error);
}

TEST_CASE("mm_regression: fixed point, monotone objective, normal equations") {
  const Dataset d = linear_data(200, 4, 8);
  const KernelConfig cfg = KernelConfig::regression(4, 200);
  const RegressionEstimate s = s_regression(d, cfg, 500, 3);

  Vector beta = s.beta;
  double prev = mm_objective(d, beta, s.sigma, cfg.c1);
  for (int it = 0; it < 30; ++it) {
    beta = mm_step(d, beta, s.sigma, cfg.c1);
    const double obj = mm_objective(d, beta, s.sigma, cfg.c1);
    CHECK(obj <= prev + 1e-12);
    prev = obj;
  }

  const RegressionEstimate mm = mm_regression(d, s, cfg);
  CHECK(mm.sigma == s.sigma);
  const Vector r = residuals(d, mm.beta);
  Vector score = Vector::Zero(4);
  for (Eigen::Index i = 0; i < d.n(); ++i)
    score += weight_bisquare(r(i) / mm.sigma, cfg.c1) * d.X.row(i).transpose() * r(i);
  CHECK(score.norm() <= 1e-6 * d.X.norm());

  const RegressionEstimate again = mm_regression(d, mm, cfg);
  CHECK((again.beta - mm.beta).norm() < 1e-7);
}

TEST_CASE("MM close to LS on clean data") {
  const Dataset d = linear_data(500, 6, 10);
  const KernelConfig cfg = KernelConfig::regression(6, 500);
  const RegressionEstimate ls = ls_fit(d);
  const RegressionEstimate mm = mm_regression(d, s_regression(d, cfg, 500, 1), cfg);
  // Coefficient standard error is about 1/sqrt(n); MM - LS is of smaller order.
  CHECK((mm.beta - ls.beta).cwiseAbs().maxCoeff() < 3.0 / std::sqrt(500.0));
}

TEST_CASE("weighted_design_cov") {
  Dataset d = linear_data(30, 3, 12);
  const KernelConfig cfg = KernelConfig::regression(3, 30);
  RegressionEstimate flat;
  flat.beta = Vector::Zero(3);
  flat.sigma = 1e6;  // every weight equals W(~0)
  const Matrix C = weighted_design_cov(d, flat, cfg);
  CHECK((C - d.X.transpose() * d.X / 30.0).cwiseAbs().maxCoeff() < 1e-8);

  // Rows x = 1 and x = 2 with weights in ratio 1 : 3: the second residual is
  // zero and the first solves (1 - (r / c1)^2)^2 = 1/3.
  Dataset two;
  two.X = (Matrix(2, 1) << 1.0, 2.0).finished();
  two.y = (Vector(2) << cfg.c1 * std::sqrt(1.0 - 1.0 / std::sqrt(3.0)), 0.0).finished();
  RegressionEstimate est;
  est.beta = Vector::Zero(1);
  est.sigma = 1.0;
  CHECK(weighted_design_cov(two, est, cfg)(0, 0) == doctest::Approx(3.25).epsilon(1e-12));

  RegressionEstimate far;
  far.beta = Vector::Constant(3, 1e8);
  far.sigma = 1.0;
  CHECK_THROWS_AS(weighted_design_cov(d, far, cfg), Error);

  const Dataset big = linear_data(100, 4, 5);
  const KernelConfig cb = KernelConfig::regression(4, 100);
  const RegressionEstimate s = s_regression(big, cb, 200, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weighted_design_cov(big, s, cb));
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("equivariance of S and MM") {
  const Dataset d = linear_data(80, 3, 21);
  const KernelConfig cfg = KernelConfig::regression(3, 80);
  const RegressionEstimate s = s_regression(d, cfg, 300, 5);
  const RegressionEstimate mm = mm_regression(d, s, cfg);

  const Vector b = (Vector(3) << 0.5, -1.0, 2.0).finished();
  Dataset shifted = d;
  shifted.y += d.X * b;
  const RegressionEstimate s2 = s_regression(shifted, cfg, 300, 5);
  CHECK((s2.beta - (s.beta + b)).norm() < 1e-6);
  CHECK(mm_regression(shifted, s2, cfg).beta.isApprox(mm.beta + b, 1e-6));

  Dataset scaled = d;
  scaled.y *= 3.0;
  const RegressionEstimate s3 = s_regression(scaled, cfg, 300, 5);
  CHECK(s3.beta.isApprox(3.0 * s.beta, 1e-6));
  CHECK(s3.sigma == doctest::Approx(3.0 * s.sigma).epsilon(1e-8));

  Matrix A = Matrix::Identity(3, 3);
  A(1, 2) = 0.7;
  A(2, 1) = -0.3;
  A(1, 1) = 2.0;
  Dataset affine = d;
  affine.X = d.X * A;
  const RegressionEstimate s4 = s_regression(affine, cfg, 300, 5);
  CHECK((A * s4.beta - s.beta).norm() < 1e-6);
}
