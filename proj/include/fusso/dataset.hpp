#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fusso {

// N instances of p functional covariates, each observed on the grid k/n,
// k = 1..n, plus one scalar response per instance. Covariate j is held as an
// N x n matrix (row i = instance i's grid sample). Immutable once built.
class FunctionalDataset {
 public:
  FunctionalDataset(std::vector<Eigen::MatrixXd> covariates, Eigen::VectorXd responses);

  int N() const { return static_cast<int>(responses_.size()); }
  int p() const { return static_cast<int>(covariates_.size()); }
  int n() const { return static_cast<int>(covariates_.front().cols()); }
  const Eigen::MatrixXd& covariate(int j) const { return covariates_.at(static_cast<std::size_t>(j)); }
  const Eigen::VectorXd& responses() const { return responses_; }

 private:
  std::vector<Eigen::MatrixXd> covariates_;
  Eigen::VectorXd responses_;
};

// Estimated projection coefficients for every (instance, covariate) cell,
// packed as one N x (p*M) matrix: block j occupies columns [j*M, (j+1)*M).
// The packed layout doubles as the Group-LASSO design.
class CoefficientTensor {
 public:
  CoefficientTensor(Eigen::MatrixXd flat, int p, int M);

  int N() const { return static_cast<int>(flat_->rows()); }
  int p() const { return p_; }
  int M() const { return M_; }
  const Eigen::MatrixXd& flat() const { return *flat_; }
  std::shared_ptr<const Eigen::MatrixXd> shared() const { return flat_; }
  Eigen::VectorXd block(int i, int j) const {
    return flat_->row(i).segment(static_cast<Eigen::Index>(j) * M_, M_);
  }

 private:
  std::shared_ptr<const Eigen::MatrixXd> flat_;
  int p_ = 0;
  int M_ = 0;
};

// Project every grid sample onto the first M basis functions; requires
// M <= n-1.
CoefficientTensor build_coefficients(const FunctionalDataset& ds, int M);

enum class Encoding { kCsv, kF64le };

std::string encoding_name(Encoding e);
Encoding parse_encoding(const std::string& name);

// On-disk layout: a JSON manifest next to the data files it references.
//   {"N":..,"p":..,"n":..,"grid":"k_over_n","responses":..,
//    "covariates":..,"encoding":"csv"|"f64le"}
// "covariates" containing "{j}" names one file per covariate (0-based j);
// otherwise it names a single stacked f64le file of p*N rows.
void save_dataset(const FunctionalDataset& ds, const std::filesystem::path& dir,
                  Encoding encoding = Encoding::kCsv);

// `path` may be the manifest file itself or a directory containing
// manifest.json. Validates dimensions and finiteness eagerly.
FunctionalDataset load_dataset(const std::filesystem::path& path);

}  // namespace fusso
