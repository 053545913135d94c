#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fusso/dataset.hpp"
#include "fusso/rng.hpp"

namespace fusso {

// Stream-splitting rule (tags from rng.hpp):
//   beta_star block j     : derive_seed(seed, {kStreamBetaStar, j})
//   alpha block (i, j)    : derive_seed(seed, {kStreamAlpha, i, j})
//   grid noise (i, j)     : derive_seed(seed, {kStreamGridNoise, i, j})
//   response noise i      : derive_seed(seed, {kStreamResponseNoise, i})
//   benchmark trial t     : spec.seed replaced by derive_seed(seed, {kStreamTrial, t})
struct SynthSpec {
  int N = 50;
  int n = 5;
  int p = 100;
  int s = 5;
  int M_gen = 20;              // coefficients used to build the true functions
  double sigma_xi = 0.1;       // grid-noise standard deviation
  double sigma_eps_sq = 0.1;   // response-noise variance
  double gamma_weight = 2.0;   // damping exponent: entry m divided by c_m^gamma_weight
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthInstance {
  FunctionalDataset dataset;
  Eigen::MatrixXd true_alpha;   // N x (p*M_gen), packed like CoefficientTensor
  Eigen::MatrixXd beta_star;    // p x M_gen, row j = block j (zero rows for j >= s)
  std::vector<int> true_support;  // exactly {0, .., s-1}
};

// Deterministic tail of the block generator: divide entry m of `raw` by
// c_m^gamma_weight (c from sobolev_weight) and normalize to unit norm.
Eigen::VectorXd damp_and_normalize(Eigen::VectorXd raw, double gamma_weight);

// One random unit-norm coefficient block: draw a_m ~ Unif[-1,1] for
// m = 1..M_gen in order, then damp_and_normalize.
Eigen::VectorXd gen_coeff_block(Rng& rng, int M_gen, double gamma_weight = 2.0);

// The p x M_gen matrix of true regression blocks for this spec.
Eigen::MatrixXd gen_beta_star(const SynthSpec& spec);

// Noisy grid observations for covariate j (N x n). phi_gen must be
// basis_matrix(regular_grid(n), M_gen). When alpha_out is non-null it
// receives the N x M_gen true coefficient blocks.
Eigen::MatrixXd gen_covariate_grid(const SynthSpec& spec, int j, const Eigen::MatrixXd& phi_gen,
                                   Eigen::MatrixXd* alpha_out = nullptr);

// Noiseless response contribution sum_{j<s} <beta*_j, alpha_j> given one
// covariate's alpha block, plus the response-noise draw per instance.
Eigen::VectorXd gen_response_noise(const SynthSpec& spec);

// Materialize a full instance. Deterministic per spec (including seed).
SynthInstance gen_instance(const SynthSpec& spec);

// Truth sidecar: {"spec": {...}, "true_support": [...], "beta_star": [s x M_gen]}
// with beta_star rows aligned with true_support.
void save_truth(const std::filesystem::path& path, const SynthSpec& spec,
                const Eigen::MatrixXd& beta_star, const std::vector<int>& true_support);

struct TruthFile {
  SynthSpec spec;
  Eigen::MatrixXd beta_star;  // p x M_gen (zero rows off support)
  std::vector<int> true_support;
};
TruthFile load_truth(const std::filesystem::path& path);

}  // namespace fusso
