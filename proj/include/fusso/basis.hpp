#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fusso {

// Trigonometric orthonormal basis on [0,1]:
//   phi_1(x) = 1,  phi_2k(x) = sqrt(2) cos(2 pi k x),
//   phi_{2k+1}(x) = sqrt(2) sin(2 pi k x).
inline double eval_basis(int m, double x) {
  if (m < 1) throw std::invalid_argument("eval_basis: index m must be >= 1, got " + std::to_string(m));
  if (m == 1) return 1.0;
  const double two_pi = 2.0 * std::numbers::pi;
  const double sqrt2 = std::numbers::sqrt2;
  if (m % 2 == 0) {
    const int k = m / 2;
    return sqrt2 * std::cos(two_pi * k * x);
  }
  const int k = (m - 1) / 2;
  return sqrt2 * std::sin(two_pi * k * x);
}

// Evaluation matrix of the first M basis functions on arbitrary points in
// [0,1]; entry (i, m-1) = phi_m(points[i]). No orthonormality constraint
// on M here.
inline Eigen::MatrixXd basis_matrix(const Eigen::Ref<const Eigen::VectorXd>& points, int M) {
  if (M < 1) throw std::invalid_argument("basis_matrix: M must be >= 1");
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const double x = points[i];
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("basis_matrix: grid point " + std::to_string(x) + " outside [0,1]");
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const double sqrt2 = std::numbers::sqrt2;
  Eigen::MatrixXd phi(points.size(), M);
  phi.col(0).setOnes();
  for (int m = 2; m <= M; ++m) {
    const int k = m / 2;  // frequency; integer division pairs 2k and 2k+1
    if (m % 2 == 0)
      phi.col(m - 1) = sqrt2 * (two_pi * k * points.array()).cos();
    else
      phi.col(m - 1) = sqrt2 * (two_pi * k * points.array()).sin();
  }
  return phi;
}

// The sampling grid k/n, k = 1..n. No sample at 0.
inline Eigen::VectorXd regular_grid(int n) {
  if (n < 2) throw std::invalid_argument("regular_grid: n must be >= 2");
  return Eigen::VectorXd::LinSpaced(n, 1.0 / n, 1.0);
}

// n x M matrix with entry (k-1, m-1) = phi_m(k/n). Discrete orthonormality
// (1/n) Phi^T Phi = I holds exactly for M <= n-1, which is why larger M is
// rejected rather than clamped.
inline Eigen::MatrixXd design_matrix(int n, int M) {
  if (n < 2) throw std::invalid_argument("design_matrix: n must be >= 2");
  if (M < 1 || M > n - 1)
    throw std::invalid_argument("design_matrix: truncation M=" + std::to_string(M) +
                                " too large for grid n=" + std::to_string(n) + " (need 1 <= M <= n-1)");
  return basis_matrix(regular_grid(n), M);
}

// Estimated projection coefficients from one grid sample:
// alpha_m = (1/n) phi_m^T y, m = 1..M.
inline Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& y, int M) {
  const int n = static_cast<int>(y.size());
  const Eigen::MatrixXd phi = design_matrix(n, M);
  return (phi.transpose() * y) / static_cast<double>(n);
}

// Row-wise projection: each row of y_rows is one grid sample of length n.
// Returns the N x M coefficient matrix (1/n) Y Phi.
inline Eigen::MatrixXd project_rows(const Eigen::Ref<const Eigen::MatrixXd>& y_rows, int M) {
  const int n = static_cast<int>(y_rows.cols());
  const Eigen::MatrixXd phi = design_matrix(n, M);
  return (y_rows * phi) / static_cast<double>(n);
}

// Evaluate sum_m block[m] phi_m at the given points.
inline Eigen::VectorXd reconstruct(const Eigen::Ref<const Eigen::VectorXd>& block,
                                   const Eigen::Ref<const Eigen::VectorXd>& grid) {
  if (block.size() < 1) throw std::invalid_argument("reconstruct: empty coefficient block");
  return basis_matrix(grid, static_cast<int>(block.size())) * block;
}

// Sobolev ellipsoid weight c_k = k^gamma for k even or k = 1, else (k-1)^gamma.
inline double sobolev_weight(int k, double gamma) {
  if (k < 1) throw std::invalid_argument("sobolev_weight: index must be >= 1");
  const int base = (k == 1 || k % 2 == 0) ? k : k - 1;
  return std::pow(static_cast<double>(base), gamma);
}

}  // namespace fusso
