#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace fusso {

struct SolveOptions {
  double tol = 1e-6;           // KKT residual target
  int max_iter = 10000;        // block-coordinate sweeps
  double change_tol = 1e-10;   // max relative coefficient change per sweep
  bool track_objective = false;
};

struct FitResult {
  Eigen::VectorXd beta;        // p blocks of length M, flattened
  std::vector<int> support;    // blocks with an exactly nonzero coefficient, ascending
  double objective = 0.0;
  int iterations = 0;          // sweeps performed
  double kkt_residual = 0.0;
  double lambda = 0.0;
  bool converged = true;
  std::vector<double> objective_trace;  // per sweep, when track_objective
};

struct LambdaGrid {
  int count = 100;
  double ratio = 1e-3;  // smallest lambda = ratio * lambda_max
  std::vector<double> explicit_lambdas;  // used instead when nonempty; strictly decreasing
};

struct PathResult {
  Eigen::VectorXd lambdas;  // strictly decreasing
  std::vector<FitResult> fits;
  double lambda_max = 0.0;
};

// Least squares with a group penalty over p blocks of M consecutive columns:
//   (1/2N) ||y - sum_j A_j beta_j||^2 + lambda sum_j ||beta_j||_2.
// block_stride lets block j live at columns [j*stride, j*stride + M) of a
// wider matrix, so truncations share storage with the full design.
class GroupProblem {
 public:
  GroupProblem(Eigen::MatrixXd design, Eigen::VectorXd response, int p, int M);

  GroupProblem(std::shared_ptr<const Eigen::MatrixXd> design, Eigen::VectorXd response,
               int p, int M, int block_stride);

  // View of the same storage with each block truncated to its first new_M columns.
  GroupProblem truncated(int new_M) const;

  // View of the same storage with a different response (same length N).
  GroupProblem with_response(Eigen::VectorXd response) const;

  int N() const { return static_cast<int>(response_.size()); }
  int p() const { return p_; }
  int M() const { return M_; }
  int block_stride() const { return stride_; }
  const Eigen::MatrixXd& design() const { return *design_; }
  const Eigen::VectorXd& response() const { return response_; }
  auto block(int j) const { return design_->middleCols(static_cast<Eigen::Index>(j) * stride_, M_); }

 private:
  std::shared_ptr<const Eigen::MatrixXd> design_;
  Eigen::VectorXd response_;
  int p_ = 0;
  int M_ = 0;
  int stride_ = 0;
};

// prox of t*||.||_2: zero when ||v|| <= t (exactly), else (1 - t/||v||) v.
Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& v, double t);

// Smallest lambda with all-zero solution: max_j ||(1/N) A_j^T y||_2.
double lambda_max(const GroupProblem& prob);

// Largest eigenvalue of (1/N) A_j^T A_j per block, by power iteration on the
// block Gram matrix (at most 100 iterations, tolerance 1e-10).
Eigen::VectorXd block_lipschitz(const GroupProblem& prob);

double objective_value(const GroupProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& beta,
                       double lambda);

// Maximum blockwise KKT violation:
//   nonzero block: ||(1/N) A_j^T (A beta - y) + lambda beta_j/||beta_j|| ||
//   zero block:    max(0, ||(1/N) A_j^T (y - A beta)|| - lambda)
double kkt_residual(const GroupProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& beta,
                    double lambda);

// Cyclic block coordinate descent; each block update is the prox step on the
// block-majorized subproblem with step 1/L_j. Zero blocks are exact zeros.
// `init` warm-starts, `lipschitz` reuses precomputed block constants.
FitResult fit(const GroupProblem& prob, double lambda, const Eigen::VectorXd* init = nullptr,
              const SolveOptions& opts = {}, const Eigen::VectorXd* lipschitz = nullptr);

// Decreasing-lambda path, each fit warm-started from the previous solution.
PathResult fit_path(const GroupProblem& prob, const LambdaGrid& grid = {},
                    const SolveOptions& opts = {});

// Log-spaced grid from lambda_max down to ratio*lambda_max.
Eigen::VectorXd lambda_grid_values(double lambda_max_value, const LambdaGrid& grid);

// Blocks with at least one exactly nonzero coefficient.
std::vector<int> support_of(const Eigen::Ref<const Eigen::VectorXd>& beta, int p, int M);

}  // namespace fusso
