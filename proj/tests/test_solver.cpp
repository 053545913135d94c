#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fusso/errors.hpp"
#include "fusso/rng.hpp"
#include "fusso/solver.hpp"
#include "oracles.hpp"

using namespace fusso;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform_pm1();
  return m;
}

Eigen::VectorXd random_vector(Rng& rng, int size) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = rng.uniform_pm1();
  return v;
}

GroupProblem random_problem(Rng& rng, int N, int p, int M) {
  return GroupProblem(random_matrix(rng, N, p * M), random_vector(rng, N), p, M);
}

}  // namespace

TEST_CASE("group_soft_threshold boundary, identity, and shrink") {
  Eigen::VectorXd v(2);
  v << 3, 4;
  const Eigen::VectorXd zero = group_soft_threshold(v, 5.0);
  CHECK((zero.array() == 0.0).all());  // ||v|| = 5 exactly: boundary zeros out

  CHECK(group_soft_threshold(v, 0.0) == v);

  const Eigen::VectorXd shrunk = group_soft_threshold(v, 2.5);
  CHECK(shrunk[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(shrunk[1] == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_AS(group_soft_threshold(v, -1.0), std::invalid_argument);
}

TEST_CASE("group_soft_threshold minimizes 0.5||x-v||^2 + t||x||") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + static_cast<int>(rng.below(5));
    Eigen::VectorXd v = 3.0 * random_vector(rng, dim);
    const double t = 2.0 * rng.uniform();
    const Eigen::VectorXd got = group_soft_threshold(v, t);
    const Eigen::VectorXd want = oracle::prox_minimize(v, t);
    CHECK((got - want).norm() <= 1e-6);
  }
}

TEST_CASE("lambda_max") {
  Rng rng(5);
  SUBCASE("zero response") {
    GroupProblem prob(random_matrix(rng, 6, 6), Eigen::VectorXd::Zero(6), 3, 2);
    CHECK(lambda_max(prob) == 0.0);
  }
  SUBCASE("identity design single block") {
    const int N = 3;
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(N);
    e1[0] = 1.0;
    GroupProblem prob(Eigen::MatrixXd::Identity(N, N), e1, 1, N);
    CHECK(lambda_max(prob) == doctest::Approx(1.0 / N).epsilon(1e-15));
  }
  SUBCASE("matches per-block brute force") {
    const int N = 5, p = 3, M = 2;
    const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
    const Eigen::VectorXd y = random_vector(rng, N);
    double brute = 0.0;
    for (int j = 0; j < p; ++j) {
      double sq = 0.0;
      for (int m = 0; m < M; ++m) {
        double dot = 0.0;
        for (int i = 0; i < N; ++i) dot += A(i, j * M + m) * y[i];
        sq += (dot / N) * (dot / N);
      }
      brute = std::max(brute, std::sqrt(sq));
    }
    GroupProblem prob(A, y, p, M);
    CHECK(lambda_max(prob) == doctest::Approx(brute).epsilon(1e-13));
  }
}

TEST_CASE("fit: zero solution at lambda >= lambda_max") {
  Rng rng(42);
  const GroupProblem prob = random_problem(rng, 8, 4, 3);
  const double lmax = lambda_max(prob);
  const FitResult fr = fit(prob, lmax);
  CHECK((fr.beta.array() == 0.0).all());
  CHECK(fr.support.empty());
  CHECK(fr.converged);
}

TEST_CASE("fit: ordinary least squares at lambda = 0") {
  Eigen::MatrixXd A(2, 1);
  A << 1, 1;
  Eigen::VectorXd y(2);
  y << 1, 1;
  GroupProblem prob(A, y, 1, 1);
  const FitResult fr = fit(prob, 0.0);
  CHECK(fr.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fr.kkt_residual <= 1e-10);
}

TEST_CASE("fit objective matches the subgradient oracle") {
  Rng rng(2024);
  const int N = 8, p = 4, M = 3;
  const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  const Eigen::VectorXd y = 2.0 * random_vector(rng, N);
  GroupProblem prob(A, y, p, M);
  const double lambda = 0.3 * lambda_max(prob);

  SolveOptions opts;
  opts.tol = 1e-10;
  const FitResult fr = fit(prob, lambda, nullptr, opts);
  const double oracle_obj = oracle::subgradient_best_objective(A, y, p, M, lambda, 1000000);
  CHECK(fr.objective == doctest::Approx(oracle_obj).epsilon(1e-6));
  CHECK(fr.kkt_residual <= 1e-10);
}

TEST_CASE("fit_path: empty support at the top, warm equals cold") {
  Rng rng(77);
  const GroupProblem prob = random_problem(rng, 12, 5, 2);
  SolveOptions opts;
  opts.tol = 1e-9;
  LambdaGrid grid;
  grid.count = 25;
  const PathResult path = fit_path(prob, grid, opts);

  CHECK(path.lambdas.size() == 25);
  CHECK(path.lambdas[0] == path.lambda_max);
  CHECK(path.fits.front().support.empty());
  for (Eigen::Index i = 1; i < path.lambdas.size(); ++i)
    CHECK(path.lambdas[i] < path.lambdas[i - 1]);

  for (std::size_t i = 0; i < path.fits.size(); ++i) {
    const FitResult cold = fit(prob, path.lambdas[static_cast<Eigen::Index>(i)], nullptr, opts);
    CHECK(cold.objective ==
          doctest::Approx(path.fits[i].objective).epsilon(1e-8));
  }
}

TEST_CASE("fit_path: support grows down the path on a planted instance") {
  Rng rng(8);
  const int N = 40, p = 6, M = 2;
  const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(p * M);
  beta_true.segment(0, M) << 3.0, -2.0;
  beta_true.segment(M, M) << -2.5, 1.5;
  Eigen::VectorXd y = A * beta_true;
  for (int i = 0; i < N; ++i) y[i] += 0.01 * rng.normal();
  GroupProblem prob(A, y, p, M);

  const PathResult path = fit_path(prob, LambdaGrid{.count = 40});
  const std::vector<int> truth{0, 1};
  std::size_t prev_size = 0;
  for (const FitResult& fr : path.fits) {
    const bool within_truth =
        std::includes(truth.begin(), truth.end(), fr.support.begin(), fr.support.end());
    if (!within_truth) break;  // first entry beyond the truth ends the regime
    CHECK(fr.support.size() >= prev_size);
    prev_size = fr.support.size();
  }
  CHECK(prev_size == truth.size());  // the full truth was reached
}

TEST_CASE("kkt_residual") {
  SUBCASE("exact OLS solution at lambda = 0") {
    Rng rng(3);
    const int N = 12, p = 2, M = 2;
    const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
    const Eigen::VectorXd y = random_vector(rng, N);
    const Eigen::VectorXd beta_ols = (A.transpose() * A).ldlt().solve(A.transpose() * y);
    GroupProblem prob(A, y, p, M);
    CHECK(kkt_residual(prob, beta_ols, 0.0) <= 1e-10);
  }
  SUBCASE("beta = 0 at lambda_max") {
    Rng rng(4);
    const GroupProblem prob = random_problem(rng, 9, 3, 3);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(9);
    CHECK(kkt_residual(prob, zero, lambda_max(prob)) <= 1e-12);
  }
  SUBCASE("perturbing a converged solution increases the residual") {
    Rng rng(6);
    const GroupProblem prob = random_problem(rng, 10, 3, 2);
    const double lambda = 0.2 * lambda_max(prob);
    SolveOptions opts;
    opts.tol = 1e-11;
    const FitResult fr = fit(prob, lambda, nullptr, opts);
    Eigen::VectorXd bumped = fr.beta;
    bumped[0] += 1e-3;
    CHECK(kkt_residual(prob, bumped, lambda) > fr.kkt_residual);
  }
}

TEST_CASE("objective is nonincreasing across sweeps") {
  Rng rng(15);
  const GroupProblem prob = random_problem(rng, 20, 5, 3);
  const double lambda = 0.1 * lambda_max(prob);
  Eigen::VectorXd init = random_vector(rng, 15);
  SolveOptions opts;
  opts.track_objective = true;
  const FitResult fr = fit(prob, lambda, &init, opts);
  REQUIRE(fr.objective_trace.size() >= 2);
  for (std::size_t k = 1; k < fr.objective_trace.size(); ++k)
    CHECK(fr.objective_trace[k] <= fr.objective_trace[k - 1] + 1e-12);
}

TEST_CASE("exact zero solution at lambda slightly above lambda_max, 100 problems") {
  Rng rng(999);
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 4 + static_cast<int>(rng.below(8));
    const int p = 1 + static_cast<int>(rng.below(5));
    const int M = 1 + static_cast<int>(rng.below(4));
    const GroupProblem prob = random_problem(rng, N, p, M);
    const FitResult fr = fit(prob, lambda_max(prob) * (1.0 + 1e-9));
    CHECK((fr.beta.array() == 0.0).all());
  }
}

TEST_CASE("scaling equivariance: (cY, c lambda) scales beta by c") {
  Rng rng(55);
  const int N = 15, p = 4, M = 2;
  const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  const Eigen::VectorXd y = random_vector(rng, N);
  GroupProblem prob(A, y, p, M);
  const double lambda = 0.25 * lambda_max(prob);
  SolveOptions opts;
  opts.tol = 1e-11;
  const double c = 3.7;
  const FitResult base = fit(prob, lambda, nullptr, opts);
  GroupProblem scaled(A, c * y, p, M);
  const FitResult mult = fit(scaled, c * lambda, nullptr, opts);
  CHECK((mult.beta - c * base.beta).norm() <= 1e-8 * std::max(1.0, (c * base.beta).norm()));
}

TEST_CASE("permutation equivariance over blocks") {
  Rng rng(66);
  const int N = 20, p = 4, M = 3;  // N > p*M keeps the minimizer unique
  const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  const Eigen::VectorXd y = 2.0 * random_vector(rng, N);
  const double lambda = 0.15 * lambda_max(GroupProblem(A, y, p, M));
  SolveOptions opts;
  opts.tol = 1e-11;

  const std::vector<int> perm{2, 0, 3, 1};
  Eigen::MatrixXd Ap(N, p * M);
  for (int j = 0; j < p; ++j) Ap.middleCols(j * M, M) = A.middleCols(perm[j] * M, M);

  const FitResult base = fit(GroupProblem(A, y, p, M), lambda, nullptr, opts);
  const FitResult permuted = fit(GroupProblem(Ap, y, p, M), lambda, nullptr, opts);
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd want = base.beta.segment(perm[j] * M, M);
    const Eigen::VectorXd got = permuted.beta.segment(j * M, M);
    CHECK((got - want).norm() <= 1e-8 * std::max(1.0, want.norm()));
  }
}

TEST_CASE("smooth-part gradient matches central finite differences") {
  Rng rng(88);
  const int N = 10, p = 3, M = 2;
  const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  const Eigen::VectorXd y = random_vector(rng, N);
  const Eigen::VectorXd beta = random_vector(rng, p * M);

  const Eigen::VectorXd analytic = A.transpose() * (A * beta - y) / N;
  const Eigen::VectorXd numeric = oracle::finite_diff_gradient(
      [&](const Eigen::VectorXd& b) { return 0.5 / N * (y - A * b).squaredNorm(); }, beta);
  CHECK((analytic - numeric).norm() <= 1e-5 * std::max(1.0, analytic.norm()));
}

TEST_CASE("all-zero design block never enters the support") {
  Rng rng(70);
  const int N = 10, p = 3, M = 2;
  Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  A.middleCols(M, M).setZero();  // block 1 dead
  const Eigen::VectorXd y = random_vector(rng, N);
  GroupProblem prob(A, y, p, M);
  const PathResult path = fit_path(prob, LambdaGrid{.count = 10});
  for (const FitResult& fr : path.fits)
    for (int j : fr.support) CHECK(j != 1);
}

TEST_CASE("max_iter exhaustion is flagged, best iterate returned") {
  Rng rng(91);
  const GroupProblem prob = random_problem(rng, 10, 4, 2);
  SolveOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-14;
  const FitResult fr = fit(prob, 1e-4 * lambda_max(prob), nullptr, opts);
  CHECK_FALSE(fr.converged);
  CHECK(fr.iterations == 1);
  CHECK(std::isfinite(fr.objective));
}

TEST_CASE("GroupProblem validates dimensions and finiteness") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Ones(4, 6);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(GroupProblem(A, y, 2, 2), std::invalid_argument);  // cols != p*M
  CHECK_THROWS_AS(GroupProblem(A, Eigen::VectorXd::Ones(3), 3, 2), std::invalid_argument);
  A(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(GroupProblem(A, y, 3, 2), DataError);
}

TEST_CASE("truncated views share storage and agree with packed copies") {
  Rng rng(123);
  const int N = 9, p = 3, M = 4;
  const Eigen::MatrixXd A = random_matrix(rng, N, p * M);
  const Eigen::VectorXd y = random_vector(rng, N);
  GroupProblem full(A, y, p, M);
  GroupProblem narrow = full.truncated(2);

  Eigen::MatrixXd packed(N, p * 2);
  for (int j = 0; j < p; ++j) packed.middleCols(j * 2, 2) = A.middleCols(j * M, 2);
  GroupProblem copy(packed, y, p, 2);

  const double lambda = 0.3 * lambda_max(copy);
  const FitResult a = fit(narrow, lambda);
  const FitResult b = fit(copy, lambda);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() == 0.0);  // same arithmetic, same result
}
