#include "dcml/study.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "dcml/parallel.hpp"
#include "dcml/rng.hpp"
#include "dcml/stats.hpp"

namespace dcml {

const char* to_string(Metric m) noexcept {
  switch (m) {
    case Metric::MSE: return "MSE";
    case Metric::MaxMSE: return "MaxMSE";
    case Metric::Efficiency: return "Efficiency";
    case Metric::MeanLoss: return "MeanLoss";
    case Metric::MaxMeanLoss: return "MaxMeanLoss";
    case Metric::RMSE: return "RMSE";
    case Metric::ProbEqualLS: return "ProbEqualLS";
    case Metric::Quantile: return "Quantile";
    case Metric::Delta: return "Delta";
    case Metric::Coefficient: return "Coefficient";
  }
  return "?";
}

void StudyResult::add(std::string scenario, std::string estimator, Metric metric, double value,
                      double se) {
  if (!std::isfinite(value))
    throw Error(ErrorCode::Numerical, "non-finite " + std::string(to_string(metric)) + " for " +
                                          estimator + " in " + scenario);
  records.push_back({std::move(scenario), std::move(estimator), metric, value,
                     std::isfinite(se) ? std::max(se, 0.0) : 0.0});
}

void StudyResult::append(const StudyResult& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
  attempts += other.attempts;
  failures += other.failures;
}

const StudyRecord& StudyResult::get(const std::string& scenario, const std::string& estimator,
                                    Metric metric) const {
  for (const StudyRecord& r : records)
    if (r.scenario == scenario && r.estimator == estimator && r.metric == metric) return r;
  throw Error(ErrorCode::InvalidParameter, "no " + std::string(to_string(metric)) + " record for " +
                                               estimator + " in " + scenario);
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& a) {
  const double n = static_cast<double>(a.size());
  MeanSe out;
  for (double x : a) out.mean += x;
  out.mean /= n;
  if (a.size() > 1) {
    double ss = 0.0;
    for (double x : a) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

// mean(a) / mean(b) for paired samples, with its delta-method error.
MeanSe ratio_se(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const MeanSe ma = mean_se(a);
  const MeanSe mb = mean_se(b);
  MeanSe out;
  out.mean = ma.mean / mb.mean;
  if (a.size() > 1) {
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double da = a[i] - ma.mean;
      const double db = b[i] - mb.mean;
      saa += da * da;
      sbb += db * db;
      sab += da * db;
    }
    saa /= n - 1.0;
    sbb /= n - 1.0;
    sab /= n - 1.0;
    const double r = out.mean;
    const double var = (saa - 2.0 * r * sab + r * r * sbb) / (mb.mean * mb.mean) / n;
    out.se = std::sqrt(std::max(var, 0.0));
  }
  return out;
}

void check_failures(std::size_t failures, std::size_t attempts, double max_rate,
                    const std::string& id) {
  if (attempts > 0 && static_cast<double>(failures) > max_rate * static_cast<double>(attempts))
    throw Error(ErrorCode::Numerical, "study " + id + ": " + std::to_string(failures) + " of " +
                                          std::to_string(attempts) + " replicates failed");
}

std::vector<double> coefficient_sq_norms(const RegressionFits& fits) {
  return {fits.ls.beta.squaredNorm(), fits.s.beta.squaredNorm(), fits.mm.beta.squaredNorm(),
          fits.dcml.estimate.beta.squaredNorm()};
}

std::size_t method_slot(Method m) { return static_cast<std::size_t>(m); }

std::string k_label(const std::string& id, double K) { return id + "@K=" + fmt(K); }

}  // namespace

void write_csv(std::ostream& out, const StudyResult& result) {
  out << "scenario,estimator,metric,value,mc_std_error\n";
  for (const StudyRecord& r : result.records)
    out << csv_field(r.scenario) << ',' << csv_field(r.estimator) << ',' << to_string(r.metric)
        << ',' << fmt(r.value) << ',' << fmt(r.mc_std_error) << '\n';
}

std::string to_csv(const StudyResult& result) {
  std::ostringstream out;
  write_csv(out, result);
  return out.str();
}

std::string to_json(const StudyResult& result) {
  nlohmann::json records = nlohmann::json::array();
  for (const StudyRecord& r : result.records)
    records.push_back({{"scenario", r.scenario},
                       {"estimator", r.estimator},
                       {"metric", to_string(r.metric)},
                       {"value", r.value},
                       {"mc_std_error", r.mc_std_error}});
  nlohmann::json doc = {{"records", std::move(records)},
                        {"attempts", result.attempts},
                        {"failures", result.failures}};
  return doc.dump(2) + "\n";
}

StudyResult run_regression_study(const std::vector<RegressionScenario>& scenarios,
                                 const std::vector<Method>& estimators, int n_rep,
                                 const StudyOptions& options) {
  if (n_rep < 2) throw Error(ErrorCode::InvalidParameter, "run_regression_study: need n_rep >= 2");
  if (estimators.empty())
    throw Error(ErrorCode::InvalidParameter, "run_regression_study: no estimators requested");
  StudyResult result;
  for (const RegressionScenario& sc : scenarios) {
    sc.validate();
    const std::string id = sc.id();
    const std::uint64_t fit_key = hash_key("fit/" + sc.stream_key());
    const std::size_t reps = static_cast<std::size_t>(n_rep);
    const bool clean = sc.m() == 0;
    const std::vector<double> grid = clean ? std::vector<double>{0.0} : sc.k_grid;

    // slots[k * reps + r] holds the squared norms of every estimator.
    std::vector<std::optional<std::vector<double>>> slots(grid.size() * reps);
    parallel_for(slots.size(), options.threads, [&](std::size_t job) {
      const std::size_t k = job / reps;
      const std::size_t rep = job % reps;
      Dataset data = generate_regression_sample(sc, rep);
      if (!clean) data = contaminate_regression(std::move(data), sc, grid[k]);
      try {
        const RegressionFits fits =
            fit_regression_pipeline(data, derive_seed(sc.seed, {fit_key, rep}), options.pipeline);
        slots[job] = coefficient_sq_norms(fits);
      } catch (const Error&) {
        slots[job].reset();
      }
    });

    std::size_t failures = 0;
    std::vector<std::vector<std::vector<double>>> by_k(grid.size(),
                                                       std::vector<std::vector<double>>(4));
    for (std::size_t job = 0; job < slots.size(); ++job) {
      if (!slots[job]) {
        ++failures;
        continue;
      }
      for (std::size_t e = 0; e < 4; ++e) by_k[job / reps][e].push_back((*slots[job])[e]);
    }
    result.attempts += slots.size();
    result.failures += failures;
    check_failures(failures, slots.size(), options.max_failure_rate, id);

    if (clean) {
      const auto& ls = by_k[0][method_slot(Method::LS)];
      for (Method m : estimators) {
        const auto& values = by_k[0][method_slot(m)];
        const MeanSe mse = mean_se(values);
        result.add(id, to_string(m), Metric::MSE, mse.mean, mse.se);
        const MeanSe eff = ratio_se(ls, values);
        result.add(id, to_string(m), Metric::Efficiency, eff.mean, eff.se);
      }
      continue;
    }
    for (Method m : estimators) {
      MeanSe worst{-1.0, 0.0};
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const MeanSe mse = mean_se(by_k[k][method_slot(m)]);
        result.add(k_label(id, grid[k]), to_string(m), Metric::MSE, mse.mean, mse.se);
        if (mse.mean > worst.mean) worst = mse;
      }
      result.add(id, to_string(m), Metric::MaxMSE, worst.mean, worst.se);
    }
  }
  return result;
}

double min_efficiency(const StudyResult& result, const std::vector<RegressionScenario>& scenarios,
                      Method estimator) {
  if (scenarios.empty()) throw Error(ErrorCode::InvalidParameter, "min_efficiency: no scenarios");
  double out = std::numeric_limits<double>::infinity();
  for (const RegressionScenario& sc : scenarios)
    out = std::min(out, result.get(sc.id(), to_string(estimator), Metric::Efficiency).value);
  return out;
}

const std::vector<std::string>& multivariate_estimators() {
  static const std::vector<std::string> tags{"ML", "S", "DCML"};
  return tags;
}

double location_loss(const Vector& mu) { return mu.squaredNorm(); }

double scatter_loss(const Matrix& sigma, bool unshifted) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidMatrix, "scatter_loss: matrix is not positive definite");
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double loss = sigma.trace() - log_det;
  return unshifted ? loss : loss - static_cast<double>(sigma.rows());
}

StudyResult run_multivariate_study(const std::vector<MultivariateScenario>& scenarios, int n_rep,
                                   const StudyOptions& options) {
  if (n_rep < 2) throw Error(ErrorCode::InvalidParameter, "run_multivariate_study: need n_rep >= 2");
  StudyResult result;
  constexpr std::size_t kEst = 3;
  for (const MultivariateScenario& sc : scenarios) {
    sc.validate();
    const std::string id = sc.id();
    const std::uint64_t fit_key = hash_key("fit/" + sc.stream_key());
    const std::size_t reps = static_cast<std::size_t>(n_rep);
    const bool clean = sc.m() == 0;
    const std::vector<double> grid = clean ? std::vector<double>{0.0} : sc.k_grid;

    // Per job: location losses then scatter losses, ML / S / DCML.
    std::vector<std::optional<std::array<double, 2 * kEst>>> slots(grid.size() * reps);
    parallel_for(slots.size(), options.threads, [&](std::size_t job) {
      const std::size_t k = job / reps;
      const std::size_t rep = job % reps;
      Matrix obs = generate_multivariate_sample(sc, rep);
      if (!clean) obs = contaminate_multivariate(std::move(obs), sc, grid[k]);
      try {
        const MultivariateFits fits = fit_multivariate_pipeline(
            obs, derive_seed(sc.seed, {fit_key, rep}), options.pipeline.n_subsamples);
        const LocationScatter* est[kEst] = {&fits.ml, &fits.s, &fits.dcml};
        std::array<double, 2 * kEst> losses{};
        for (std::size_t e = 0; e < kEst; ++e) {
          losses[e] = location_loss(est[e]->mu);
          losses[kEst + e] = scatter_loss(est[e]->sigma, options.unshifted_scatter_loss);
        }
        slots[job] = losses;
      } catch (const Error&) {
        slots[job].reset();
      }
    });

    std::size_t failures = 0;
    std::vector<std::array<std::vector<double>, 2 * kEst>> by_k(grid.size());
    for (std::size_t job = 0; job < slots.size(); ++job) {
      if (!slots[job]) {
        ++failures;
        continue;
      }
      for (std::size_t e = 0; e < 2 * kEst; ++e) by_k[job / reps][e].push_back((*slots[job])[e]);
    }
    result.attempts += slots.size();
    result.failures += failures;
    check_failures(failures, slots.size(), options.max_failure_rate, id);

    const char* targets[2] = {"mu", "Sigma"};
    for (std::size_t tg = 0; tg < 2; ++tg) {
      const std::string tid = id + "/" + targets[tg];
      for (std::size_t e = 0; e < kEst; ++e) {
        const std::string& name = multivariate_estimators()[e];
        const std::size_t slot = tg * kEst + e;
        if (clean) {
          const MeanSe loss = mean_se(by_k[0][slot]);
          result.add(tid, name, Metric::MeanLoss, loss.mean, loss.se);
          const MeanSe eff = ratio_se(by_k[0][tg * kEst], by_k[0][slot]);
          result.add(tid, name, Metric::Efficiency, eff.mean, eff.se);
          continue;
        }
        MeanSe worst{-std::numeric_limits<double>::infinity(), 0.0};
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const MeanSe loss = mean_se(by_k[k][slot]);
          result.add(k_label(id, grid[k]) + "/" + targets[tg], name, Metric::MeanLoss, loss.mean,
                     loss.se);
          if (loss.mean > worst.mean) worst = loss;
        }
        result.add(tid, name, Metric::MaxMeanLoss, worst.mean, worst.se);
      }
    }
  }
  return result;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  for (std::string& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line) + ": " + what);
}

double rmse_on(const Dataset& data, const Vector& beta) {
  return std::sqrt(residuals(data, beta).squaredNorm() / static_cast<double>(data.n()));
}

}  // namespace

Dataset read_csv_dataset(const std::string& path, const std::string& response, bool intercept) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") != std::string::npos) header = split_csv_line(line);
  }
  if (header.empty()) parse_fail(path, line_no, "missing header row");
  const auto resp_it = std::find(header.begin(), header.end(), response);
  if (resp_it == header.end())
    throw Error(ErrorCode::InvalidParameter, "response column '" + response + "' not found in " + path);
  const std::size_t resp_col = static_cast<std::size_t>(resp_it - header.begin());

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      parse_fail(path, line_no,
                 "expected " + std::to_string(header.size()) + " fields, found " +
                     std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& f = fields[j];
      const char* end = f.data() + f.size();
      const auto [ptr, ec] = std::from_chars(f.data(), end, row[j]);
      if (f.empty() || ec != std::errc() || ptr != end || !std::isfinite(row[j]))
        parse_fail(path, line_no, "field '" + header[j] + "' is not a number: '" + f + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_fail(path, line_no, "no data rows");

  Dataset data;
  data.intercept = intercept;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(header.size() - 1 + (intercept ? 1 : 0));
  data.X.resize(n, p);
  data.y.resize(n);
  if (intercept) data.column_names.push_back("(Intercept)");
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != resp_col) data.column_names.push_back(header[j]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    if (intercept) data.X(i, col++) = 1.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == resp_col)
        data.y(i) = row[j];
      else
        data.X(i, col++) = row[j];
    }
  }
  return data;
}

StudyResult real_data_workflow(const std::string& csv_path,
                               const std::vector<int>& bad_rows_1based,
                               const std::string& response, std::uint64_t seed,
                               const PipelineOptions& options) {
  const Dataset all = read_csv_dataset(csv_path, response);
  std::vector<bool> bad(static_cast<std::size_t>(all.n()), false);
  for (int r : bad_rows_1based) {
    if (r < 1 || r > all.n())
      throw Error(ErrorCode::InvalidFilter, "row " + std::to_string(r) + " is outside 1.." +
                                                std::to_string(all.n()));
    bad[static_cast<std::size_t>(r - 1)] = true;
  }
  std::vector<Eigen::Index> good_rows;
  for (Eigen::Index i = 0; i < all.n(); ++i)
    if (!bad[static_cast<std::size_t>(i)]) good_rows.push_back(i);
  if (static_cast<Eigen::Index>(good_rows.size()) <= all.p() + 1)
    throw Error(ErrorCode::InvalidFilter, "too few rows remain after filtering");
  const Dataset good = all.subset(good_rows);

  StudyResult result;
  const std::pair<const char*, const Dataset*> fits_on[2] = {{"good", &good}, {"whole", &all}};
  for (const auto& [label, data] : fits_on) {
    const RegressionFits fits = fit_regression_pipeline(*data, seed, options);
    const RegressionEstimate* est[4] = {&fits.ls, &fits.s, &fits.mm, &fits.dcml.estimate};
    for (const RegressionEstimate* e : est)
      result.add(label, to_string(e->method), Metric::RMSE, rmse_on(good, e->beta));
    for (const RegressionEstimate* e : est)
      for (Eigen::Index j = 0; j < e->beta.size(); ++j)
        result.add(std::string(label) + ":" + all.column_names[static_cast<std::size_t>(j)],
                   to_string(e->method), Metric::Coefficient, e->beta(j));
  }
  return result;
}

std::vector<double> delta_diagnostic_distances(int p, int n, Target target, int n_rep,
                                               std::uint64_t seed, unsigned threads) {
  if (n_rep < 1) throw Error(ErrorCode::InvalidParameter, "delta diagnostic: need n_rep >= 1");
  MultivariateScenario sc;
  sc.p = p;
  sc.n = n;
  sc.seed = seed;
  sc.validate();
  const std::uint64_t fit_key = hash_key("fit/" + sc.stream_key());
  std::vector<double> out(static_cast<std::size_t>(n_rep));
  parallel_for(out.size(), threads, [&](std::size_t rep) {
    const Matrix obs = generate_multivariate_sample(sc, rep);
    const LocationScatter ml = sample_mean_cov(obs);
    const LocationScatter s = s_estimate(obs, 0, derive_seed(seed, {fit_key, rep}));
    out[rep] = target == Target::Scatter ? kl_scatter(s.sigma, ml.sigma)
                                         : kl_location(s.mu, ml.mu, s.sigma);
  });
  return out;
}

double delta_quantile_diagnostic(int p, int n, Target target, double alpha, int n_rep,
                                 std::uint64_t seed, unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidParameter, "delta diagnostic: alpha must lie in (0, 1)");
  const double probs[1] = {alpha};
  return quantiles(delta_diagnostic_distances(p, n, target, n_rep, seed, threads), probs)[0];
}

}  // namespace dcml
