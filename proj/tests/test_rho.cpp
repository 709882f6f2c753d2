#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "dcml/rho.hpp"

using namespace dcml;

namespace {

// Composite Simpson on [a, b]; independent of the library's quadrature.
template <class F>
double simpson(F f, double a, double b, int intervals = 20000) {
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double simpson_efficiency(double c) {
  // psi written out by hand so the oracle does not reuse psi_bisquare.
  auto psi = [c](double t) {
    const double u = t / c;
    return std::abs(u) >= 1.0 ? 0.0 : 6.0 * t / (c * c) * (1 - u * u) * (1 - u * u);
  };
  auto dpsi = [c](double t) {
    const double u = t / c;
    return std::abs(u) >= 1.0 ? 0.0 : 6.0 / (c * c) * (1 - u * u) * (1 - 5 * u * u);
  };
  const double a = simpson([&](double t) { return dpsi(t) * phi(t); }, -c, c);
  const double b = simpson([&](double t) { return psi(t) * psi(t) * phi(t); }, -c, c);
  return a * a / b;
}

}  // namespace

TEST_CASE("rho_bisquare values") {
  const double c = 1.547;
  CHECK(rho_bisquare(0.0, c) == 0.0);
  CHECK(rho_bisquare(c, c) == 1.0);
  CHECK(rho_bisquare(10.0, c) == 1.0);
  CHECK(rho_bisquare(c / 2, c) == doctest::Approx(0.578125).epsilon(1e-15));
  CHECK_THROWS_AS(rho_bisquare(1.0, 0.0), Error);
  CHECK_THROWS_AS(rho_bisquare(1.0, -2.0), Error);
}

TEST_CASE("psi is the derivative of rho") {
  const double c = 2.3;
  CHECK(psi_bisquare(0.0, c) == 0.0);
  CHECK(psi_bisquare(c, c) == 0.0);
  CHECK(psi_bisquare(-c, c) == 0.0);
  const double h = 1e-5;
  for (double t = -3.0; t <= 3.0; t += 0.0371) {
    const double fd = (rho_bisquare(t + h, c) - rho_bisquare(t - h, c)) / (2 * h);
    CHECK(std::abs(psi_bisquare(t, c) - fd) < 1e-6);
    const double fd2 = (psi_bisquare(t + h, c) - psi_bisquare(t - h, c)) / (2 * h);
    if (std::abs(std::abs(t) - c) > 2 * h) CHECK(std::abs(psi_prime_bisquare(t, c) - fd2) < 1e-6);
  }
  CHECK_THROWS_AS(psi_bisquare(1.0, 0.0), Error);
}

TEST_CASE("weight_bisquare") {
  const double c = 3.44;
  CHECK(weight_bisquare(0.0, c) == doctest::Approx(6.0 / (c * c)));
  CHECK(weight_bisquare(1e-9, c) == doctest::Approx(weight_bisquare(0.0, c)));
  CHECK(weight_bisquare(c, c) == 0.0);
  CHECK(std::abs(weight_bisquare(c / 2, c) * (c / 2) - psi_bisquare(c / 2, c)) < 1e-12);
  double prev = weight_bisquare(0.0, c);
  for (double t = 0.01; t < 5.0; t += 0.01) {
    const double w = weight_bisquare(t, c);
    CHECK(w <= prev);
    CHECK((w == 0.0) == (t >= c));
    prev = w;
  }
}

TEST_CASE("kernel shape on a dense grid") {
  const double c0 = 1.547, c1 = 3.44;
  for (double t = -8.0; t <= 8.0; t += 0.013) {
    const double r = rho_bisquare(t, c0);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(r == rho_bisquare(-t, c0));
    CHECK(psi_bisquare(t, c0) == -psi_bisquare(-t, c0));
    CHECK(weight_bisquare(t, c0) >= 0.0);
    if (std::abs(t) >= c1) {
      CHECK(weight_bisquare(t, c1) == 0.0);
      CHECK(rho_bisquare(t, c0) == 1.0);
    }
  }
  for (double t = 0.01; t < c0; t += 0.01) CHECK(rho_bisquare(t, c0) > rho_bisquare(t - 0.01, c0));
}

TEST_CASE("KernelConfig invariants") {
  KernelConfig ok{1.547, 3.44, 0.5};
  CHECK_NOTHROW(ok.validate());
  KernelConfig bad = ok;
  bad.c1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = ok;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  const KernelConfig reg = KernelConfig::regression(6, 100);
  CHECK(reg.gamma == doctest::Approx(0.5 * (1 - 6.0 / 100)));
  CHECK(reg.c0 == 1.547);
}

TEST_CASE("m_scale: degenerate and equal residuals") {
  const std::vector<double> zeros(10, 0.0);
  const MScale z = m_scale(zeros, 1.547, 0.5);
  CHECK(z.degenerate);
  CHECK(z.value == 0.0);

  // Five zeros out of ten leave exactly gamma n nonzero residuals: no root.
  std::vector<double> half{0, 0, 0, 0, 0, 1, 2, 3, 4, 5};
  CHECK(m_scale(half, 1.547, 0.5).degenerate);

  // rho(t*) = gamma has the closed form t* = c sqrt(1 - (1 - gamma)^(1/3)).
  for (double gamma : {0.2, 0.4, 0.5}) {
    const double c = 1.547, r = 2.5;
    const double t_star = c * std::sqrt(1.0 - std::cbrt(1.0 - gamma));
    const std::vector<double> eq(7, r);
    CHECK(m_scale(eq, c, gamma).value == doctest::Approx(r / t_star).epsilon(1e-9));
  }
  CHECK_THROWS_AS(m_scale(std::vector<double>{}, 1.547, 0.5), Error);
  CHECK_THROWS_AS(m_scale(half, 1.547, 1.5), Error);
}

TEST_CASE("m_scale: equivariance and root residual") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  std::vector<double> r(501);
  for (double& x : r) x = normal(rng) * 3.0 + 0.5;
  const double gamma = 0.37;
  const MScale s = m_scale(r, 1.547, gamma);
  REQUIRE(!s.degenerate);
  CHECK(std::abs(mean_rho(r, s.value, 1.547) - gamma) <= 1e-9);
  for (double a : {-4.0, 0.01, 7.5}) {
    std::vector<double> scaled(r);
    for (double& x : scaled) x *= a;
    CHECK(m_scale(scaled, 1.547, gamma).value == doctest::Approx(std::abs(a) * s.value).epsilon(1e-9));
  }
}

TEST_CASE("m_scale consistency at the normal") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  std::vector<double> r(1000000);
  for (double& x : r) x = normal(rng);
  CHECK(std::abs(m_scale(r, 1.547, 0.5).value - 1.0) < 0.01);
}

TEST_CASE("tuning constant for efficiency") {
  const double c85 = tuning_constant_for_efficiency(0.85);
  // Independent oracle: bisection on the Simpson efficiency.
  double lo = 2.0, hi = 6.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (simpson_efficiency(mid) < 0.85 ? lo : hi) = mid;
  }
  CHECK(c85 == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));
  CHECK(c85 == doctest::Approx(3.44369).epsilon(1e-5));
  CHECK(gaussian_efficiency(c85) == doctest::Approx(0.85).epsilon(1e-5));
  CHECK(std::abs(simpson_efficiency(c85) - 0.85) < 1e-5);
  CHECK(tuning_constant_for_efficiency(0.95) > c85);
  CHECK_THROWS_AS(tuning_constant_for_efficiency(1.0), Error);
  CHECK_THROWS_AS(tuning_constant_for_efficiency(0.0), Error);
}

TEST_CASE("consistency constant for chi distances") {
  // p = 1 reduces to the univariate normal case: c ~ 1.547 at gamma = 0.5.
  CHECK(consistency_constant(1, 0.5) == doctest::Approx(1.5476).epsilon(1e-3));
  // E rho(sqrt(X), c) = gamma, checked by Simpson over the chi density.
  for (int p : {2, 5}) {
    const double gamma = 0.4;
    const double c = consistency_constant(p, gamma);
    auto chi = [p](double r) {
      return std::exp((p - 1) * std::log(r) - 0.5 * r * r - (0.5 * p - 1) * std::log(2.0) -
                      std::lgamma(0.5 * p));
    };
    const double body = simpson([&](double r) { return rho_bisquare(r, c) * chi(r); }, 1e-12, c);
    const double tail = simpson(chi, c, c + 40.0);
    CHECK(body + tail == doctest::Approx(gamma).epsilon(1e-7));
  }
}
