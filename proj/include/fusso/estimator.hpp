#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "fusso/dataset.hpp"
#include "fusso/solver.hpp"

namespace fusso {

struct FussoConfig {
  std::optional<int> M;          // empty = choose by cross validation
  std::optional<double> lambda;  // empty = choose by cross validation
  int cv_folds = 5;
  std::vector<int> M_grid;       // CV candidates; empty = auto_M_grid(n)
  LambdaGrid lambda_grid;
  SolveOptions solver;
  bool standardize = false;
  bool intercept = false;
  std::uint64_t cv_seed = 0;     // fold shuffle seed
};

// Fitted FuSSO model: each g_j = sum_m beta_{jm} phi_m, support = blocks with
// an exactly nonzero coefficient.
struct FussoModel {
  Eigen::VectorXd beta;  // p blocks of length M, flattened
  std::vector<int> support;
  int p = 0;
  int M = 0;
  int n = 0;  // training grid size; predictions require matching samples
  double lambda = 0.0;
  double intercept = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = true;

  Eigen::VectorXd block(int j) const {
    return beta.segment(static_cast<Eigen::Index>(j) * M, M);
  }
};

struct CvEntry {
  int M;
  double lambda;
  double mean_mse;
  double se;
};

struct CvResult {
  int best_M = 0;
  double best_lambda = 0.0;
  std::vector<CvEntry> table;
};

// Default CV truncation grid: 1..4 then roughly geometric up to n-1.
std::vector<int> auto_M_grid(int n);

// K-fold CV over (M, lambda) on a packed coefficient design whose blocks
// have width `stride` (candidate M values use prefix columns of each block).
// Folds are contiguous chunks of a seeded shuffle. Ties break toward smaller
// M, then larger lambda. `lambda_grid` empty means a per-M default grid from
// the full-data lambda_max.
CvResult cross_validate_design(const std::shared_ptr<const Eigen::MatrixXd>& design,
                               const Eigen::VectorXd& y, int p, int stride,
                               const std::vector<int>& M_grid,
                               const std::vector<double>& lambda_grid, const FussoConfig& cfg);

CvResult cross_validate(const FunctionalDataset& ds, const FussoConfig& cfg,
                        std::vector<int> M_grid = {}, std::vector<double> lambda_grid = {});

// The full pipeline: project, truncate, Group-LASSO, with CV for any of
// (M, lambda) left unspecified.
FussoModel fit_fusso(const FunctionalDataset& ds, const FussoConfig& cfg = {});

// Prediction for one instance given its p grid samples; only support blocks
// are projected.
double predict(const FussoModel& model, const std::vector<Eigen::VectorXd>& functions);

Eigen::VectorXd predict_dataset(const FussoModel& model, const FunctionalDataset& ds);

// Re-solve restricted to `support` with a smaller penalty; blocks off the
// given support stay exactly zero.
FussoModel two_stage_refit(const FunctionalDataset& ds, const std::vector<int>& support, int M,
                           double lambda_small, const FussoConfig& cfg = {});
FussoModel two_stage_refit(const FunctionalDataset& ds, const FussoModel& first_stage,
                           double lambda_small);

// Recovered regression function g_j evaluated on `grid`.
Eigen::VectorXd recover_g(const FussoModel& model, int j,
                          const Eigen::Ref<const Eigen::VectorXd>& grid);

// Y-GL baseline: Group-LASSO directly on grid samples; block j's design is
// the N x n grid matrix of covariate j scaled by 1/n.
GroupProblem ygl_problem(const FunctionalDataset& ds);
FitResult fit_ygl(const FunctionalDataset& ds, double lambda, const SolveOptions& opts = {});

// JSON container {M, lambda, intercept, support, beta, basis, n, p}; beta is
// inline (support-only rows) or, when large, {"file","storage"} pointing at
// an f64le sidecar next to the model file.
void save_model(const FussoModel& model, const std::filesystem::path& path);
FussoModel load_model(const std::filesystem::path& path);

}  // namespace fusso
