#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dcml/dcml_multivariate.hpp"
#include "dcml/dcml_regression.hpp"
#include "dcml/scenario.hpp"

namespace dcml {

enum class Metric {
  MSE,
  MaxMSE,
  Efficiency,
  MeanLoss,
  MaxMeanLoss,
  RMSE,
  ProbEqualLS,
  Quantile,
  Delta,
  Coefficient,
};

const char* to_string(Metric m) noexcept;

struct StudyRecord {
  std::string scenario;
  std::string estimator;
  Metric metric = Metric::MSE;
  double value = 0.0;
  double mc_std_error = 0.0;
};

struct StudyResult {
  std::vector<StudyRecord> records;
  std::size_t attempts = 0;  ///< replicate fits attempted
  std::size_t failures = 0;  ///< replicates excluded after an estimator error

  void add(std::string scenario, std::string estimator, Metric metric, double value,
           double se = 0.0);
  void append(const StudyResult& other);
  /// Throws InvalidParameter when the record is missing.
  const StudyRecord& get(const std::string& scenario, const std::string& estimator,
                         Metric metric) const;
};

/// Columns scenario, estimator, metric, value, mc_std_error; values with 10
/// significant digits.
void write_csv(std::ostream& out, const StudyResult& result);
std::string to_csv(const StudyResult& result);
std::string to_json(const StudyResult& result);

struct StudyOptions {
  PipelineOptions pipeline;
  unsigned threads = 0;  ///< 0: hardware concurrency
  /// Scatter loss trace - log det without the -p offset.
  bool unshifted_scatter_loss = false;
  /// Replicate failure rate above which the study throws.
  double max_failure_rate = 0.01;
};

/// For each scenario and estimator: MSE = ave ||beta_hat||^2 and the
/// efficiency MSE(LS) / MSE(estimator) from the same replicates when
/// epsilon = 0; the per-K MSE ("<id>@K=<K>") and its maximum over the grid
/// when epsilon > 0. Standard errors by the delta method.
StudyResult run_regression_study(const std::vector<RegressionScenario>& scenarios,
                                 const std::vector<Method>& estimators, int n_rep,
                                 const StudyOptions& options = {});

/// Smallest efficiency of `estimator` over the clean `scenarios` in `result`.
double min_efficiency(const StudyResult& result, const std::vector<RegressionScenario>& scenarios,
                      Method estimator);

/// Estimator tags of the multivariate study: "ML", "S", "DCML".
const std::vector<std::string>& multivariate_estimators();

/// Loss of a location estimate: ||mu||^2.
double location_loss(const Vector& mu);
/// Loss of a scatter estimate: trace(S) - log|S| - p (or without -p).
double scatter_loss(const Matrix& sigma, bool unshifted = false);

/// Mean losses for location ("<id>/mu") and scatter ("<id>/Sigma"), with
/// efficiency ML / estimator when epsilon = 0 and the maximum mean loss over
/// the K grid when epsilon > 0.
StudyResult run_multivariate_study(const std::vector<MultivariateScenario>& scenarios, int n_rep,
                                   const StudyOptions& options = {});

/// Reads a CSV with a header row. Throws ParseError with the line number on
/// malformed input.
Dataset read_csv_dataset(const std::string& path, const std::string& response,
                         bool intercept = true);

/// Fits LS, S, MM and DCML on the good rows (every row not in
/// `bad_rows_1based`) and on all rows; reports the RMSE over the good rows
/// for both (scenarios "good" and "whole") and the coefficients.
StudyResult real_data_workflow(const std::string& csv_path,
                               const std::vector<int>& bad_rows_1based,
                               const std::string& response, std::uint64_t seed,
                               const PipelineOptions& options = {});

/// KL distance between the S estimate and the MLE (scatter: kl_scatter(S, ML);
/// location: kl_location(mu_S, xbar, S)) for n_rep clean N_p(0, I) samples.
std::vector<double> delta_diagnostic_distances(int p, int n, Target target, int n_rep,
                                               std::uint64_t seed, unsigned threads = 0);

/// alpha-quantile over n_rep clean N_p(0, I) samples of the KL distance
/// between the S estimate and the MLE (scatter or location).
double delta_quantile_diagnostic(int p, int n, Target target, double alpha, int n_rep,
                                 std::uint64_t seed, unsigned threads = 0);

}  // namespace dcml
