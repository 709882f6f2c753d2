#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcml/asymptotics.hpp"
#include "dcml/regression.hpp"

namespace dcml {

/// Predictor laws. Every non-intercept coordinate is standardized to mean 0
/// and variance 1 with the exact moments of the law.
enum class PredictorDist { Normal, Uniform01, Student4, NormalSquared, UniformSquared };

const char* to_string(PredictorDist d) noexcept;
/// Throws InvalidScenario for unknown tags, including Student4Squared (the
/// squared t4 has no fourth moment, so C_x would not exist).
PredictorDist parse_predictor_dist(const std::string& text);
const std::vector<PredictorDist>& all_predictor_dists();

/// 0.5, 0.6, ..., 2.0.
std::vector<double> regression_k_grid();
/// 1, 2, ..., 10.
std::vector<double> multivariate_k_grid();

struct RegressionScenario {
  int p = 5;  ///< slopes; the design has p + 1 columns
  int n = 100;
  PredictorDist x_dist = PredictorDist::Normal;
  ErrorLaw error_dist = ErrorLaw::Normal;
  double epsilon = 0.0;
  std::vector<double> k_grid = regression_k_grid();
  double x0 = 5.0;
  std::uint64_t seed = 1;

  int m() const;
  /// Throws InvalidScenario.
  void validate() const;
  /// Stable identifier, e.g. "reg_p5_n100_Normal_normal_eps0.1".
  std::string id() const;
  /// Everything that determines the clean sample; contamination settings
  /// are left out so all K share the same clean draws.
  std::string stream_key() const;
};

struct MultivariateScenario {
  int p = 5;
  int n = 50;
  double epsilon = 0.0;
  std::vector<double> k_grid = multivariate_k_grid();
  std::uint64_t seed = 1;

  int m() const;
  void validate() const;
  std::string id() const;
  std::string stream_key() const;
};

/// Clean sample with beta = 0 and sigma = 1; deterministic given
/// (scenario, replicate).
Dataset generate_regression_sample(const RegressionScenario& sc, std::size_t replicate);

/// Replaces the last m rows by x = (1, x0, 0, ..., 0), y = x0 K.
Dataset contaminate_regression(Dataset data, const RegressionScenario& sc, double K);

/// n x p draws from N_p(0, I).
Matrix generate_multivariate_sample(const MultivariateScenario& sc, std::size_t replicate);

/// Replaces the first m rows by (K, 0, ..., 0).
Matrix contaminate_multivariate(Matrix obs, const MultivariateScenario& sc, double K);

}  // namespace dcml
