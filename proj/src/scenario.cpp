#include "dcml/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "dcml/rng.hpp"

namespace dcml {

const char* to_string(PredictorDist d) noexcept {
  switch (d) {
    case PredictorDist::Normal: return "Normal";
    case PredictorDist::Uniform01: return "Uniform01";
    case PredictorDist::Student4: return "Student4";
    case PredictorDist::NormalSquared: return "NormalSquared";
    case PredictorDist::UniformSquared: return "UniformSquared";
  }
  return "?";
}

PredictorDist parse_predictor_dist(const std::string& text) {
  for (PredictorDist d : all_predictor_dists())
    if (text == to_string(d)) return d;
  if (text == "Student4Squared")
    throw Error(ErrorCode::InvalidScenario,
                "Student4Squared is not a valid predictor law: its second-moment matrix does not exist");
  throw Error(ErrorCode::InvalidScenario, "unknown predictor distribution '" + text + "'");
}

const std::vector<PredictorDist>& all_predictor_dists() {
  static const std::vector<PredictorDist> all{PredictorDist::Normal, PredictorDist::Uniform01,
                                              PredictorDist::Student4, PredictorDist::NormalSquared,
                                              PredictorDist::UniformSquared};
  return all;
}

std::vector<double> regression_k_grid() {
  std::vector<double> grid;
  for (int k = 5; k <= 20; ++k) grid.push_back(k / 10.0);
  return grid;
}

std::vector<double> multivariate_k_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(k);
  return grid;
}

namespace {

int contaminated_rows(int n, double epsilon) {
  return static_cast<int>(std::floor(n * epsilon + 1e-12));
}

void check_contamination(int n, double epsilon, const std::vector<double>& grid) {
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw Error(ErrorCode::InvalidScenario, "epsilon must lie in [0, 0.5)");
  if (contaminated_rows(n, epsilon) >= n)
    throw Error(ErrorCode::InvalidScenario, "too many contaminated rows");
  for (double k : grid)
    if (!std::isfinite(k)) throw Error(ErrorCode::InvalidScenario, "K grid must be finite");
  if (epsilon > 0.0 && grid.empty())
    throw Error(ErrorCode::InvalidScenario, "contaminated scenario needs a K grid");
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

double draw_predictor(PredictorDist d, Engine& rng) {
  static const double kUniformSd = std::sqrt(1.0 / 12.0);
  static const double kUniformSqSd = std::sqrt(4.0 / 45.0);
  switch (d) {
    case PredictorDist::Normal: return std::normal_distribution<double>()(rng);
    case PredictorDist::Uniform01:
      return (std::uniform_real_distribution<double>()(rng) - 0.5) / kUniformSd;
    case PredictorDist::Student4:
      return std::student_t_distribution<double>(4.0)(rng) / std::sqrt(2.0);
    case PredictorDist::NormalSquared: {
      const double z = std::normal_distribution<double>()(rng);
      return (z * z - 1.0) / std::sqrt(2.0);
    }
    case PredictorDist::UniformSquared: {
      const double u = std::uniform_real_distribution<double>()(rng);
      return (u * u - 1.0 / 3.0) / kUniformSqSd;
    }
  }
  return 0.0;
}

double draw_error(ErrorLaw law, Engine& rng) {
  switch (law) {
    case ErrorLaw::Normal: return std::normal_distribution<double>()(rng);
    case ErrorLaw::Student3: return std::student_t_distribution<double>(3.0)(rng);
    case ErrorLaw::Student5: return std::student_t_distribution<double>(5.0)(rng);
    case ErrorLaw::Uniform:
      return std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(rng);
  }
  return 0.0;
}

}  // namespace

int RegressionScenario::m() const { return contaminated_rows(n, epsilon); }

void RegressionScenario::validate() const {
  if (p < 1) throw Error(ErrorCode::InvalidScenario, "regression scenario needs p >= 1");
  if (n <= p + 1) throw Error(ErrorCode::InvalidScenario, "regression scenario needs n > p + 1");
  check_contamination(n, epsilon, k_grid);
  if (!std::isfinite(x0)) throw Error(ErrorCode::InvalidScenario, "x0 must be finite");
}

std::string RegressionScenario::id() const {
  std::string out = "reg_p" + std::to_string(p) + "_n" + std::to_string(n) + "_" +
                    to_string(x_dist) + "_" + to_string(error_dist);
  if (epsilon > 0.0) out += "_eps" + format_real(epsilon);
  return out;
}

std::string RegressionScenario::stream_key() const {
  return "reg/" + std::to_string(p) + "/" + std::to_string(n) + "/" + to_string(x_dist) + "/" +
         to_string(error_dist);
}

int MultivariateScenario::m() const { return contaminated_rows(n, epsilon); }

void MultivariateScenario::validate() const {
  if (p < 1) throw Error(ErrorCode::InvalidScenario, "multivariate scenario needs p >= 1");
  if (n <= p + 1) throw Error(ErrorCode::InvalidScenario, "multivariate scenario needs n > p + 1");
  check_contamination(n, epsilon, k_grid);
}

std::string MultivariateScenario::id() const {
  std::string out = "mv_p" + std::to_string(p) + "_n" + std::to_string(n);
  if (epsilon > 0.0) out += "_eps" + format_real(epsilon);
  return out;
}

std::string MultivariateScenario::stream_key() const {
  return "mv/" + std::to_string(p) + "/" + std::to_string(n);
}

Dataset generate_regression_sample(const RegressionScenario& sc, std::size_t replicate) {
  sc.validate();
  Engine rng = make_engine(derive_seed(sc.seed, {hash_key(sc.stream_key()), replicate}));
  Dataset data;
  data.intercept = true;
  data.X.resize(sc.n, sc.p + 1);
  data.y.resize(sc.n);
  for (int i = 0; i < sc.n; ++i) {
    data.X(i, 0) = 1.0;
    for (int j = 1; j <= sc.p; ++j) data.X(i, j) = draw_predictor(sc.x_dist, rng);
    data.y(i) = draw_error(sc.error_dist, rng);
  }
  data.column_names.push_back("(Intercept)");
  for (int j = 1; j <= sc.p; ++j) data.column_names.push_back("x" + std::to_string(j));
  return data;
}

Dataset contaminate_regression(Dataset data, const RegressionScenario& sc, double K) {
  const int m = sc.m();
  const Eigen::Index n = data.n();
  if (m >= n) throw Error(ErrorCode::InvalidScenario, "contamination would replace every row");
  if (data.p() < 2) throw Error(ErrorCode::InvalidScenario, "contamination needs a slope column");
  for (Eigen::Index i = n - m; i < n; ++i) {
    data.X.row(i).setZero();
    data.X(i, 0) = 1.0;
    data.X(i, 1) = sc.x0;
    data.y(i) = sc.x0 * K;
  }
  return data;
}

Matrix generate_multivariate_sample(const MultivariateScenario& sc, std::size_t replicate) {
  sc.validate();
  Engine rng = make_engine(derive_seed(sc.seed, {hash_key(sc.stream_key()), replicate}));
  std::normal_distribution<double> normal;
  Matrix obs(sc.n, sc.p);
  for (int i = 0; i < sc.n; ++i)
    for (int j = 0; j < sc.p; ++j) obs(i, j) = normal(rng);
  return obs;
}

Matrix contaminate_multivariate(Matrix obs, const MultivariateScenario& sc, double K) {
  const int m = sc.m();
  if (m >= obs.rows()) throw Error(ErrorCode::InvalidScenario, "contamination would replace every row");
  for (int i = 0; i < m; ++i) {
    obs.row(i).setZero();
    obs(i, 0) = K;
  }
  return obs;
}

}  // namespace dcml
