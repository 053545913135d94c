#include "fusso/synth.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fusso/basis.hpp"
#include "fusso/errors.hpp"

namespace fusso {

void SynthSpec::validate() const {
  if (N < 1) throw std::invalid_argument("SynthSpec: N must be >= 1");
  if (n < 2) throw std::invalid_argument("SynthSpec: n must be >= 2");
  if (p < 1) throw std::invalid_argument("SynthSpec: p must be >= 1");
  if (s < 0 || s > p) throw std::invalid_argument("SynthSpec: need 0 <= s <= p");
  if (M_gen < 1) throw std::invalid_argument("SynthSpec: M_gen must be >= 1");
  if (sigma_xi < 0.0 || sigma_eps_sq < 0.0)
    throw std::invalid_argument("SynthSpec: noise parameters must be >= 0");
  if (gamma_weight < 0.0) throw std::invalid_argument("SynthSpec: gamma_weight must be >= 0");
}

Eigen::VectorXd damp_and_normalize(Eigen::VectorXd raw, double gamma_weight) {
  for (Eigen::Index m = 1; m <= raw.size(); ++m)
    raw[m - 1] /= sobolev_weight(static_cast<int>(m), gamma_weight);
  const double norm = raw.norm();
  if (norm == 0.0) throw NumericalError("damp_and_normalize: degenerate all-zero block");
  return raw / norm;
}

Eigen::VectorXd gen_coeff_block(Rng& rng, int M_gen, double gamma_weight) {
  if (M_gen < 1) throw std::invalid_argument("gen_coeff_block: M_gen must be >= 1");
  Eigen::VectorXd a(M_gen);
  for (int m = 1; m <= M_gen; ++m) a[m - 1] = rng.uniform_pm1();
  return damp_and_normalize(std::move(a), gamma_weight);
}

Eigen::MatrixXd gen_beta_star(const SynthSpec& spec) {
  spec.validate();
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(spec.p, spec.M_gen);
  for (int j = 0; j < spec.s; ++j) {
    Rng rng(derive_seed(spec.seed, {kStreamBetaStar, static_cast<std::uint64_t>(j)}));
    beta.row(j) = gen_coeff_block(rng, spec.M_gen, spec.gamma_weight).transpose();
  }
  return beta;
}

Eigen::MatrixXd gen_covariate_grid(const SynthSpec& spec, int j, const Eigen::MatrixXd& phi_gen,
                                   Eigen::MatrixXd* alpha_out) {
  Eigen::MatrixXd alpha(spec.N, spec.M_gen);
  for (int i = 0; i < spec.N; ++i) {
    Rng rng(derive_seed(spec.seed, {kStreamAlpha, static_cast<std::uint64_t>(i),
                                    static_cast<std::uint64_t>(j)}));
    alpha.row(i) = gen_coeff_block(rng, spec.M_gen, spec.gamma_weight).transpose();
  }
  Eigen::MatrixXd grid = alpha * phi_gen.transpose();  // N x n noiseless samples
  if (spec.sigma_xi > 0.0) {
    for (int i = 0; i < spec.N; ++i) {
      Rng rng(derive_seed(spec.seed, {kStreamGridNoise, static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(j)}));
      for (int k = 0; k < spec.n; ++k) grid(i, k) += spec.sigma_xi * rng.normal();
    }
  }
  if (alpha_out) *alpha_out = std::move(alpha);
  return grid;
}

Eigen::VectorXd gen_response_noise(const SynthSpec& spec) {
  Eigen::VectorXd eps = Eigen::VectorXd::Zero(spec.N);
  if (spec.sigma_eps_sq > 0.0) {
    const double sd = std::sqrt(spec.sigma_eps_sq);
    for (int i = 0; i < spec.N; ++i) {
      Rng rng(derive_seed(spec.seed, {kStreamResponseNoise, static_cast<std::uint64_t>(i)}));
      eps[i] = sd * rng.normal();
    }
  }
  return eps;
}

SynthInstance gen_instance(const SynthSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd phi_gen = basis_matrix(regular_grid(spec.n), spec.M_gen);
  const Eigen::MatrixXd beta_star = gen_beta_star(spec);

  Eigen::MatrixXd true_alpha(spec.N, static_cast<Eigen::Index>(spec.p) * spec.M_gen);
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(spec.N);
  std::vector<Eigen::MatrixXd> covariates;
  covariates.reserve(static_cast<std::size_t>(spec.p));
  Eigen::MatrixXd alpha;
  for (int j = 0; j < spec.p; ++j) {
    covariates.push_back(gen_covariate_grid(spec, j, phi_gen, &alpha));
    true_alpha.middleCols(static_cast<Eigen::Index>(j) * spec.M_gen, spec.M_gen) = alpha;
    if (j < spec.s) signal.noalias() += alpha * beta_star.row(j).transpose();
  }
  const Eigen::VectorXd responses = signal + gen_response_noise(spec);

  SynthInstance inst{FunctionalDataset(std::move(covariates), responses), std::move(true_alpha),
                     beta_star, {}};
  inst.true_support.resize(static_cast<std::size_t>(spec.s));
  for (int j = 0; j < spec.s; ++j) inst.true_support[static_cast<std::size_t>(j)] = j;
  return inst;
}

namespace {

using nlohmann::json;

json spec_to_json(const SynthSpec& spec) {
  json j;
  j["N"] = spec.N;
  j["n"] = spec.n;
  j["p"] = spec.p;
  j["s"] = spec.s;
  j["M_gen"] = spec.M_gen;
  j["sigma_xi"] = spec.sigma_xi;
  j["sigma_eps_sq"] = spec.sigma_eps_sq;
  j["gamma_weight"] = spec.gamma_weight;
  j["seed"] = spec.seed;
  return j;
}

SynthSpec spec_from_json(const json& j) {
  SynthSpec spec;
  spec.N = j.at("N").get<int>();
  spec.n = j.at("n").get<int>();
  spec.p = j.at("p").get<int>();
  spec.s = j.at("s").get<int>();
  spec.M_gen = j.at("M_gen").get<int>();
  spec.sigma_xi = j.at("sigma_xi").get<double>();
  spec.sigma_eps_sq = j.at("sigma_eps_sq").get<double>();
  spec.gamma_weight = j.at("gamma_weight").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

}  // namespace

void save_truth(const std::filesystem::path& path, const SynthSpec& spec,
                const Eigen::MatrixXd& beta_star, const std::vector<int>& true_support) {
  json j;
  j["spec"] = spec_to_json(spec);
  j["true_support"] = true_support;
  json blocks = json::array();
  for (int idx : true_support) {
    json row = json::array();
    for (Eigen::Index m = 0; m < beta_star.cols(); ++m) row.push_back(beta_star(idx, m));
    blocks.push_back(std::move(row));
  }
  j["beta_star"] = std::move(blocks);
  std::ofstream os(path);
  if (!os) throw DataError("cannot write truth file: " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

TruthFile load_truth(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open truth file: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed truth file " + path.string() + ": " + e.what());
  }
  TruthFile out;
  try {
    out.spec = spec_from_json(j.at("spec"));
    out.true_support = j.at("true_support").get<std::vector<int>>();
    const auto& blocks = j.at("beta_star");
    out.beta_star = Eigen::MatrixXd::Zero(out.spec.p, out.spec.M_gen);
    if (blocks.size() != out.true_support.size())
      throw DataError("truth file: beta_star and true_support sizes differ");
    for (std::size_t k = 0; k < out.true_support.size(); ++k) {
      const int idx = out.true_support[k];
      if (idx < 0 || idx >= out.spec.p) throw DataError("truth file: support index out of range");
      const auto& row = blocks.at(k);
      if (static_cast<Eigen::Index>(row.size()) != out.beta_star.cols())
        throw DataError("truth file: beta_star block has wrong length");
      for (Eigen::Index m = 0; m < out.beta_star.cols(); ++m)
        out.beta_star(idx, m) = row.at(static_cast<std::size_t>(m)).get<double>();
    }
  } catch (const json::exception& e) {
    throw DataError("malformed truth file " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace fusso
