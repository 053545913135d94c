#include "fusso/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fusso/basis.hpp"
#include "fusso/errors.hpp"
#include "fusso/parallel.hpp"

namespace fusso {

TrialOutcome support_recovery(const PathResult& path, const std::vector<int>& truth) {
  if (path.fits.empty()) throw std::invalid_argument("support_recovery: empty path");
  std::vector<int> want = truth;
  std::sort(want.begin(), want.end());

  TrialOutcome out;
  out.lambda_max = path.lambda_max;
  for (std::size_t i = 0; i < path.fits.size(); ++i) {
    if (path.fits[i].support != want) continue;
    const double lam = path.lambdas[static_cast<Eigen::Index>(i)];
    if (!out.recovered) {
      out.recovered = true;
      out.lambda_f = lam;  // grid is decreasing: first match is the largest
    }
    out.lambda_l = lam;
  }
  return out;
}

double delta_for_trial(const TrialOutcome& outcome) {
  if (!outcome.recovered) return 0.0;
  if (!(outcome.lambda_max > 0.0))
    throw NumericalError("delta_for_trial: recovery reported with lambda_max = 0");
  return (*outcome.lambda_f - *outcome.lambda_l) / outcome.lambda_max;
}

std::string estimator_name(EstimatorChoice c) {
  return c == EstimatorChoice::kFusso ? "fusso" : "ygl";
}

EstimatorChoice parse_estimator(const std::string& name) {
  if (name == "fusso") return EstimatorChoice::kFusso;
  if (name == "ygl") return EstimatorChoice::kYgl;
  throw DataError("unknown estimator '" + name + "' (expected fusso or ygl)");
}

namespace {

// One trial: regenerate the instance covariate-by-covariate directly into
// the packed design and run the recovery scan over the path.
TrialOutcome run_trial(const SynthSpec& base, int trial, const BenchmarkOptions& opts) {
  SynthSpec spec = base;
  spec.seed = derive_seed(base.seed, {kStreamTrial, static_cast<std::uint64_t>(trial)});

  const bool ygl = opts.estimator == EstimatorChoice::kYgl;
  std::vector<int> M_grid;
  int width;  // columns per block of the packed design
  if (ygl) {
    width = spec.n;
  } else if (opts.fixed_M) {
    if (*opts.fixed_M < 1 || *opts.fixed_M > spec.n - 1)
      throw std::invalid_argument("benchmark: fixed M must lie in [1, n-1]");
    width = *opts.fixed_M;
  } else {
    M_grid = opts.M_grid.empty() ? auto_M_grid(spec.n) : opts.M_grid;
    for (int M : M_grid)
      if (M < 1 || M > spec.n - 1)
        throw std::invalid_argument("benchmark: M grid entry outside [1, n-1]");
    width = *std::max_element(M_grid.begin(), M_grid.end());
  }

  const Eigen::MatrixXd phi_gen = basis_matrix(regular_grid(spec.n), spec.M_gen);
  const Eigen::MatrixXd phi_proj = ygl ? Eigen::MatrixXd() : design_matrix(spec.n, width);
  const Eigen::MatrixXd beta_star = gen_beta_star(spec);

  auto design = std::make_shared<Eigen::MatrixXd>(spec.N, static_cast<Eigen::Index>(spec.p) * width);
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(spec.N);
  Eigen::MatrixXd alpha;
  for (int j = 0; j < spec.p; ++j) {
    const Eigen::MatrixXd grid = gen_covariate_grid(spec, j, phi_gen, &alpha);
    if (ygl)
      design->middleCols(static_cast<Eigen::Index>(j) * width, width) =
          grid / static_cast<double>(spec.n);
    else
      design->middleCols(static_cast<Eigen::Index>(j) * width, width).noalias() =
          grid * phi_proj / static_cast<double>(spec.n);
    if (j < spec.s) signal.noalias() += alpha * beta_star.row(j).transpose();
  }
  const Eigen::VectorXd y = signal + gen_response_noise(spec);
  std::shared_ptr<const Eigen::MatrixXd> design_const = design;

  int M = width;
  if (!ygl && !opts.fixed_M) {
    FussoConfig cfg;
    cfg.cv_folds = opts.cv_folds;
    cfg.lambda_grid = opts.lambda_grid;
    cfg.solver = opts.solver;
    cfg.cv_seed = spec.seed;
    const CvResult cv = cross_validate_design(design_const, y, spec.p, width, M_grid, {}, cfg);
    M = cv.best_M;
  }

  GroupProblem prob(design_const, y, spec.p, M, width);
  const PathResult path = fit_path(prob, opts.lambda_grid, opts.solver);

  std::vector<int> truth(static_cast<std::size_t>(spec.s));
  for (int j = 0; j < spec.s; ++j) truth[static_cast<std::size_t>(j)] = j;
  return support_recovery(path, truth);
}

}  // namespace

std::vector<TrialOutcome> run_benchmark_trials(const SynthSpec& spec, int trials,
                                               const BenchmarkOptions& opts) {
  spec.validate();
  if (trials < 1) throw std::invalid_argument("benchmark: trials must be >= 1");
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
  parallel_for(trials, opts.threads,
               [&](int t) { outcomes[static_cast<std::size_t>(t)] = run_trial(spec, t, opts); });
  return outcomes;
}

BenchmarkRow run_benchmark(const SynthSpec& spec, int trials, const BenchmarkOptions& opts) {
  const std::vector<TrialOutcome> outcomes = run_benchmark_trials(spec, trials, opts);
  BenchmarkRow row;
  row.p = spec.p;
  row.N = spec.N;
  row.n = spec.n;
  row.s = spec.s;
  row.trials = trials;
  row.estimator = estimator_name(opts.estimator);
  row.seed = spec.seed;
  double recovered = 0.0;
  double delta = 0.0;
  for (const TrialOutcome& o : outcomes) {  // trial order, independent of scheduling
    recovered += o.recovered ? 1.0 : 0.0;
    delta += delta_for_trial(o);
  }
  row.r = recovered / trials;
  row.delta_lambda = delta / trials;
  return row;
}

}  // namespace fusso
