#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fusso/estimator.hpp"
#include "fusso/solver.hpp"
#include "fusso/synth.hpp"

namespace fusso {

struct TrialOutcome {
  bool recovered = false;
  std::optional<double> lambda_f;  // largest recovering lambda on the grid
  std::optional<double> lambda_l;  // smallest recovering lambda on the grid
  double lambda_max = 0.0;
};

struct BenchmarkRow {
  int p = 0, N = 0, n = 0, s = 0;
  int trials = 0;
  std::string estimator;  // "fusso" or "ygl"
  double r = 0.0;
  double delta_lambda = 0.0;
  std::uint64_t seed = 0;
};

// Scans the path for fits whose support equals `truth` exactly (0-based,
// ascending). lambda_f / lambda_l are the extreme matching grid values.
TrialOutcome support_recovery(const PathResult& path, const std::vector<int>& truth);

// (lambda_f - lambda_l) / lambda_max, zero when not recovered.
double delta_for_trial(const TrialOutcome& outcome);

enum class EstimatorChoice { kFusso, kYgl };

std::string estimator_name(EstimatorChoice c);
EstimatorChoice parse_estimator(const std::string& name);

struct BenchmarkOptions {
  EstimatorChoice estimator = EstimatorChoice::kFusso;
  std::optional<int> fixed_M;  // skip per-trial CV and use this truncation
  std::vector<int> M_grid;     // CV candidates; empty = auto_M_grid(n)
  int cv_folds = 5;
  LambdaGrid lambda_grid;
  SolveOptions solver;
  int threads = 1;
};

// Monte-Carlo support-recovery benchmark. Trial t regenerates data with
// seed derive_seed(spec.seed, {kStreamTrial, t}); trials run in parallel and
// aggregate in trial order, so the row is bit-identical for a given
// (spec, trials, options, seed) at any thread count. Generation streams one
// covariate at a time, so only the packed design is ever held per trial.
BenchmarkRow run_benchmark(const SynthSpec& spec, int trials, const BenchmarkOptions& opts);

// Per-trial records, exposed for diagnostics and tests.
std::vector<TrialOutcome> run_benchmark_trials(const SynthSpec& spec, int trials,
                                               const BenchmarkOptions& opts);

}  // namespace fusso
