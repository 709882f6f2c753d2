// Command-line front end for the simulation studies, the large-sample
// Monte Carlo and real-data fits.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcml/asymptotics.hpp"
#include "dcml/rng.hpp"
#include "dcml/study.hpp"

#ifndef DCML_DATA_DIR
#define DCML_DATA_DIR "data"
#endif

namespace {

using namespace dcml;

struct OutputOptions {
  std::uint64_t seed = 1;
  std::string output;
  std::string json;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, OutputOptions& out) {
  cmd->add_option("--seed", out.seed, "Random seed")->capture_default_str();
  cmd->add_option("--output,-o", out.output, "CSV output file (default: standard output)");
  cmd->add_option("--json", out.json, "Also write the records as JSON to this file");
  cmd->add_option("--threads", out.threads, "Worker threads (0: all cores)")->capture_default_str();
}

void emit(const StudyResult& result, const OutputOptions& out) {
  if (out.output.empty() || out.output == "-") {
    write_csv(std::cout, result);
  } else {
    std::ofstream file(out.output, std::ios::binary);
    if (!file) throw Error(ErrorCode::InvalidParameter, "cannot write '" + out.output + "'");
    write_csv(file, result);
  }
  if (!out.json.empty()) {
    std::ofstream file(out.json, std::ios::binary);
    if (!file) throw Error(ErrorCode::InvalidParameter, "cannot write '" + out.json + "'");
    file << to_json(result);
  }
  if (result.failures > 0)
    std::cerr << "warning: " << result.failures << " of " << result.attempts
              << " replicates failed and were excluded\n";
}

std::vector<int> sample_sizes(int p, const std::vector<int>& n_list, const std::vector<int>& ratios) {
  if (!n_list.empty()) return n_list;
  std::vector<int> out;
  for (int r : ratios) out.push_back(r * p);
  return out;
}

// simulate-regression

struct RegressionArgs {
  OutputOptions out;
  std::vector<int> p{5, 10};
  std::vector<int> n;
  std::vector<int> ratio{5, 20};
  std::vector<std::string> x_dist;
  std::string error_dist = "normal";
  double epsilon = 0.0;
  std::vector<double> k_grid;
  double x0 = 5.0;
  int reps = 0;
  std::vector<std::string> estimators{"LS", "S", "MM", "DCML"};
  std::string variant = "convex";
  int subsamples = 0;
  bool full = false;
};

void run_simulate_regression(const RegressionArgs& a) {
  std::vector<int> ps = a.p;
  std::vector<int> ratios = a.ratio;
  if (a.full) {
    ps = {5, 10, 20};
    ratios = {5, 10, 20};
  }
  const bool clean = a.epsilon == 0.0;
  const int reps = a.reps > 0 ? a.reps : (clean ? (a.full ? 1000 : 500) : 200);

  std::vector<PredictorDist> dists;
  if (a.x_dist.empty())
    dists = clean ? all_predictor_dists() : std::vector<PredictorDist>{PredictorDist::Normal};
  for (const std::string& d : a.x_dist) dists.push_back(parse_predictor_dist(d));
  std::vector<Method> methods;
  for (const std::string& e : a.estimators) methods.push_back(parse_method(e));

  StudyOptions opt;
  opt.threads = a.out.threads;
  opt.pipeline.variant = parse_variant(a.variant);
  opt.pipeline.n_subsamples = a.subsamples;

  StudyResult all;
  for (int p : ps) {
    for (int n : sample_sizes(p, a.n, ratios)) {
      std::vector<RegressionScenario> group;
      for (PredictorDist d : dists) {
        RegressionScenario sc;
        sc.p = p;
        sc.n = n;
        sc.x_dist = d;
        sc.error_dist = parse_error_law(a.error_dist);
        sc.epsilon = a.epsilon;
        if (!a.k_grid.empty()) sc.k_grid = a.k_grid;
        sc.x0 = a.x0;
        sc.seed = a.out.seed;
        group.push_back(sc);
      }
      StudyResult part = run_regression_study(group, methods, reps, opt);
      if (clean && group.size() > 1) {
        const std::string id = "reg_p" + std::to_string(p) + "_n" + std::to_string(n) + "_" +
                               to_string(group.front().error_dist) + "_min";
        for (Method m : methods) part.add(id, to_string(m), Metric::Efficiency, min_efficiency(part, group, m));
      }
      all.append(part);
    }
  }
  emit(all, a.out);
}

// simulate-multivariate

struct MultivariateArgs {
  OutputOptions out;
  std::vector<int> p{5, 10};
  std::vector<int> n;
  std::vector<int> ratio{5, 20};
  double epsilon = 0.0;
  std::vector<double> k_grid;
  int reps = 0;
  int subsamples = 0;
  bool unshifted_loss = false;
  bool full = false;
};

void run_simulate_multivariate(const MultivariateArgs& a) {
  std::vector<int> ps = a.p;
  std::vector<int> ratios = a.ratio;
  if (a.full) {
    ps = {2, 5, 10};
    ratios = {5, 10, 20};
  }
  const bool clean = a.epsilon == 0.0;
  const int reps = a.reps > 0 ? a.reps : (clean ? (a.full ? 1000 : 500) : 200);
  std::vector<MultivariateScenario> scenarios;
  for (int p : ps)
    for (int n : sample_sizes(p, a.n, ratios)) {
      MultivariateScenario sc;
      sc.p = p;
      sc.n = n;
      sc.epsilon = a.epsilon;
      if (!a.k_grid.empty()) sc.k_grid = a.k_grid;
      sc.seed = a.out.seed;
      scenarios.push_back(sc);
    }
  StudyOptions opt;
  opt.threads = a.out.threads;
  opt.pipeline.n_subsamples = a.subsamples;
  opt.unshifted_scatter_loss = a.unshifted_loss;
  emit(run_multivariate_study(scenarios, reps, opt), a.out);
}

// asymptotics

struct AsymptoticArgs {
  OutputOptions out;
  std::vector<std::string> error_dist{"normal", "t3", "t5", "uniform"};
  std::vector<int> p{5, 10, 20};
  std::size_t draws = 0;
  std::string blend = "printed";
  std::string v22 = "squared";
  std::vector<double> probs{0.005, 0.025, 0.05, 0.5, 0.95, 0.975, 0.995};
  bool full = false;
};

void run_asymptotics(const AsymptoticArgs& a) {
  const std::size_t draws = a.draws > 0 ? a.draws : (a.full ? 1000000 : 100000);
  BlendForm blend;
  if (a.blend == "printed")
    blend = BlendForm::Printed;
  else if (a.blend == "sqrt")
    blend = BlendForm::SquareRoot;
  else
    throw Error(ErrorCode::InvalidParameter, "--blend must be 'printed' or 'sqrt'");
  V22Form form;
  if (a.v22 == "squared")
    form = V22Form::Squared;
  else if (a.v22 == "printed")
    form = V22Form::Printed;
  else
    throw Error(ErrorCode::InvalidParameter, "--v22 must be 'squared' or 'printed'");
  for (double q : a.probs)
    if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidParameter, "--probs must lie in (0, 1)");

  const KernelConfig cfg = asymptotic_kernel();
  StudyResult result;
  for (const std::string& name : a.error_dist) {
    const ErrorLaw law = parse_error_law(name);
    const AsymptoticV v = v_matrix(law, cfg, form);
    for (int p : a.p) {
      const std::string id = std::string("asym_") + to_string(law) + "_p" + std::to_string(p);
      const GvSample sample =
          sample_z3(v, p, draws, derive_seed(a.out.seed, {hash_key(id)}), blend, a.out.threads);
      const AsymptoticEfficiencies eff = asymptotic_efficiencies(sample);
      result.add(id, "DCML/LS", Metric::Efficiency, eff.eff_ls);
      result.add(id, "DCML/MM", Metric::Efficiency, eff.eff_mm);
      const double prob = prob_equal_ls(sample);
      result.add(id, "DCML", Metric::ProbEqualLS, prob,
                 std::sqrt(prob * (1.0 - prob) / static_cast<double>(sample.size())));
      const std::vector<double> q = gv_quantiles(sample, a.probs);
      for (std::size_t k = 0; k < q.size(); ++k) {
        char label[64];
        std::snprintf(label, sizeof label, "@q=%g", a.probs[k]);
        result.add(id + label, "DCML", Metric::Quantile, q[k]);
      }
    }
  }
  result.attempts = a.error_dist.size() * a.p.size();
  emit(result, a.out);
}

// fit

struct FitArgs {
  OutputOptions out;
  std::string data = std::string(DCML_DATA_DIR) + "/stackloss.csv";
  std::string response = "stack.loss";
  std::vector<int> drop_rows;
  std::string variant = "convex";
  int subsamples = 0;
};

void run_fit(const FitArgs& a) {
  PipelineOptions opt;
  opt.variant = parse_variant(a.variant);
  opt.n_subsamples = a.subsamples;
  emit(real_data_workflow(a.data, a.drop_rows, a.response, a.out.seed, opt), a.out);
}

// delta-diagnostic

struct DeltaArgs {
  OutputOptions out;
  std::vector<int> p{2, 5, 10};
  std::vector<int> n;
  std::vector<int> ratio{5, 10, 20};
  std::string target = "both";
  double alpha = 0.4;
  int reps = 200;
};

void run_delta_diagnostic(const DeltaArgs& a) {
  std::vector<Target> targets;
  if (a.target == "both")
    targets = {Target::Scatter, Target::Location};
  else
    targets = {parse_target(a.target)};
  StudyResult result;
  for (int p : a.p)
    for (int n : sample_sizes(p, a.n, a.ratio))
      for (Target t : targets) {
        const std::string id =
            "delta_p" + std::to_string(p) + "_n" + std::to_string(n) + "/" + to_string(t);
        const double q = delta_quantile_diagnostic(p, n, t, a.alpha, a.reps, a.out.seed, a.out.threads);
        result.add(id, "quantile", Metric::Delta, q);
        result.add(id, "power-law", Metric::Delta, delta_multivariate(p, n, t));
      }
  emit(result, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance-constrained maximum likelihood: simulations and fits"};
  app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags win)");
  app.require_subcommand(1);

  RegressionArgs reg;
  auto* sim_reg = app.add_subcommand("simulate-regression", "Regression Monte Carlo study");
  add_common(sim_reg, reg.out);
  sim_reg->add_option("--p", reg.p, "Numbers of slopes")->capture_default_str();
  sim_reg->add_option("--n", reg.n, "Sample sizes (overrides --ratio)");
  sim_reg->add_option("--ratio", reg.ratio, "n / p ratios")->capture_default_str();
  sim_reg->add_option("--x-dist", reg.x_dist,
                      "Predictor laws: Normal Uniform01 Student4 NormalSquared UniformSquared");
  sim_reg->add_option("--error-dist", reg.error_dist, "normal, t3, t5 or uniform")->capture_default_str();
  sim_reg->add_option("--epsilon", reg.epsilon, "Contamination rate")->capture_default_str();
  sim_reg->add_option("--k-grid", reg.k_grid, "Outlier slopes K (default 0.5 to 2 by 0.1)");
  sim_reg->add_option("--x0", reg.x0, "Leverage of the outliers")->capture_default_str();
  sim_reg->add_option("--reps", reg.reps, "Replications (default 500 clean, 200 contaminated)");
  sim_reg->add_option("--estimators", reg.estimators, "Subset of LS S MM DCML")->capture_default_str();
  sim_reg->add_option("--variant", reg.variant, "DCML variant: convex or lagrange")->capture_default_str();
  sim_reg->add_option("--subsamples", reg.subsamples, "S-estimator subsamples (0: by p)");
  sim_reg->add_flag("--full", reg.full, "Full grid: p in {5,10,20}, n/p in {5,10,20}, 1000 clean replications");
  sim_reg->callback([&] { run_simulate_regression(reg); });

  MultivariateArgs mv;
  auto* sim_mv = app.add_subcommand("simulate-multivariate", "Location/scatter Monte Carlo study");
  add_common(sim_mv, mv.out);
  sim_mv->add_option("--p", mv.p, "Dimensions")->capture_default_str();
  sim_mv->add_option("--n", mv.n, "Sample sizes (overrides --ratio)");
  sim_mv->add_option("--ratio", mv.ratio, "n / p ratios")->capture_default_str();
  sim_mv->add_option("--epsilon", mv.epsilon, "Contamination rate")->capture_default_str();
  sim_mv->add_option("--k-grid", mv.k_grid, "Outlier positions K (default 1 to 10)");
  sim_mv->add_option("--reps", mv.reps, "Replications (default 500 clean, 200 contaminated)");
  sim_mv->add_option("--subsamples", mv.subsamples, "S-estimator subsamples (0: by p)");
  sim_mv->add_flag("--unshifted-loss", mv.unshifted_loss, "Scatter loss trace - log det without the -p offset");
  sim_mv->add_flag("--full", mv.full, "Full grid: p in {2,5,10}, n/p in {5,10,20}, 1000 clean replications");
  sim_mv->callback([&] { run_simulate_multivariate(mv); });

  AsymptoticArgs asym;
  auto* as = app.add_subcommand("asymptotics", "Large-sample efficiencies and quantiles");
  add_common(as, asym.out);
  as->add_option("--error-dist", asym.error_dist, "Error laws")->capture_default_str();
  as->add_option("--p", asym.p, "Dimensions")->capture_default_str();
  as->add_option("--draws", asym.draws, "Monte Carlo draws (default 100000, 10^6 with --full)");
  as->add_option("--blend", asym.blend, "Weight rule: printed or sqrt")->capture_default_str();
  as->add_option("--v22", asym.v22, "V22 denominator: squared or printed")->capture_default_str();
  as->add_option("--probs", asym.probs, "Quantile levels")->capture_default_str();
  as->add_flag("--full", asym.full, "Use 10^6 draws");
  as->callback([&] { run_asymptotics(asym); });

  FitArgs fit;
  auto* fc = app.add_subcommand("fit", "Fit every estimator to a CSV data set");
  add_common(fc, fit.out);
  fc->add_option("--data", fit.data, "CSV file with a header row")->capture_default_str();
  fc->add_option("--response", fit.response, "Response column")->capture_default_str();
  fc->add_option("--drop-rows", fit.drop_rows, "1-based rows excluded from the good data");
  fc->add_option("--variant", fit.variant, "DCML variant: convex or lagrange")->capture_default_str();
  fc->add_option("--subsamples", fit.subsamples, "S-estimator subsamples (0: by p)");
  fc->callback([&] { run_fit(fit); });

  DeltaArgs delta;
  auto* dd = app.add_subcommand("delta-diagnostic", "Simulated quantiles of the KL distance");
  add_common(dd, delta.out);
  dd->add_option("--p", delta.p, "Dimensions")->capture_default_str();
  dd->add_option("--n", delta.n, "Sample sizes (overrides --ratio)");
  dd->add_option("--ratio", delta.ratio, "n / p ratios")->capture_default_str();
  dd->add_option("--target", delta.target, "Sigma, mu or both")->capture_default_str();
  dd->add_option("--alpha", delta.alpha, "Quantile level")->capture_default_str();
  dd->add_option("--reps", delta.reps, "Replications")->capture_default_str();
  dd->callback([&] { run_delta_diagnostic(delta); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_usage_error() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
