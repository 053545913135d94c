#include "fusso/dataset.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fusso/basis.hpp"
#include "fusso/errors.hpp"
#include "fusso/io.hpp"

namespace fusso {

namespace {

using nlohmann::json;

void check_finite_covariate(const Eigen::MatrixXd& mat, int j) {
  if (mat.allFinite()) return;
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index k = 0; k < mat.cols(); ++k)
      if (!std::isfinite(mat(i, k)))
        throw DataError("non-finite value at instance " + std::to_string(i) + ", covariate " +
                        std::to_string(j) + ", grid point " + std::to_string(k + 1));
}

}  // namespace

FunctionalDataset::FunctionalDataset(std::vector<Eigen::MatrixXd> covariates,
                                     Eigen::VectorXd responses)
    : covariates_(std::move(covariates)), responses_(std::move(responses)) {
  if (covariates_.empty()) throw DataError("dataset: needs at least one covariate");
  if (responses_.size() < 1) throw DataError("dataset: needs at least one instance");
  const Eigen::Index N = responses_.size();
  const Eigen::Index n = covariates_.front().cols();
  if (n < 2) throw DataError("dataset: grid size n must be >= 2");
  for (std::size_t j = 0; j < covariates_.size(); ++j) {
    const auto& c = covariates_[j];
    if (c.rows() != N || c.cols() != n)
      throw DataError("dataset: covariate " + std::to_string(j) + " is " +
                      std::to_string(c.rows()) + "x" + std::to_string(c.cols()) + ", expected " +
                      std::to_string(N) + "x" + std::to_string(n));
    check_finite_covariate(c, static_cast<int>(j));
  }
  if (!responses_.allFinite()) throw DataError("dataset: non-finite response value");
}

CoefficientTensor::CoefficientTensor(Eigen::MatrixXd flat, int p, int M)
    : flat_(std::make_shared<const Eigen::MatrixXd>(std::move(flat))), p_(p), M_(M) {
  if (p_ < 1 || M_ < 1) throw std::invalid_argument("CoefficientTensor: p and M must be >= 1");
  if (flat_->cols() != static_cast<Eigen::Index>(p_) * M_)
    throw std::invalid_argument("CoefficientTensor: flat matrix has wrong column count");
  if (!flat_->allFinite()) throw DataError("CoefficientTensor: non-finite coefficient");
}

CoefficientTensor build_coefficients(const FunctionalDataset& ds, int M) {
  const int n = ds.n();
  const Eigen::MatrixXd phi = design_matrix(n, M);  // rejects M > n-1
  Eigen::MatrixXd flat(ds.N(), static_cast<Eigen::Index>(ds.p()) * M);
  for (int j = 0; j < ds.p(); ++j)
    flat.middleCols(static_cast<Eigen::Index>(j) * M, M).noalias() =
        ds.covariate(j) * phi / static_cast<double>(n);
  return CoefficientTensor(std::move(flat), ds.p(), M);
}

std::string encoding_name(Encoding e) { return e == Encoding::kCsv ? "csv" : "f64le"; }

Encoding parse_encoding(const std::string& name) {
  if (name == "csv") return Encoding::kCsv;
  if (name == "f64le") return Encoding::kF64le;
  throw DataError("unknown encoding '" + name + "' (expected csv or f64le)");
}

namespace {

std::string pattern_for(Encoding e) {
  return e == Encoding::kCsv ? std::string("cov_{j}.csv") : std::string("covariates.f64le");
}

std::string substitute_index(const std::string& pattern, int j) {
  const auto pos = pattern.find("{j}");
  if (pos == std::string::npos) return pattern;
  return pattern.substr(0, pos) + std::to_string(j) + pattern.substr(pos + 3);
}

}  // namespace

void save_dataset(const FunctionalDataset& ds, const std::filesystem::path& dir,
                  Encoding encoding) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());

  const std::string responses_name =
      encoding == Encoding::kCsv ? "responses.csv" : "responses.f64le";
  const std::string cov_pattern = pattern_for(encoding);

  if (encoding == Encoding::kCsv) {
    io::write_matrix_csv(dir / responses_name, ds.responses(), {"y"});
    for (int j = 0; j < ds.p(); ++j)
      io::write_matrix_csv(dir / substitute_index(cov_pattern, j), ds.covariate(j),
                           io::grid_header(ds.n()));
  } else {
    io::write_matrix_f64le(dir / responses_name, ds.responses());
    io::StackedF64Writer w(dir / cov_pattern,
                           static_cast<std::uint64_t>(ds.p()) * static_cast<std::uint64_t>(ds.N()),
                           static_cast<std::uint64_t>(ds.n()));
    for (int j = 0; j < ds.p(); ++j) w.append(ds.covariate(j));
    w.finish();
  }

  json manifest;
  manifest["N"] = ds.N();
  manifest["p"] = ds.p();
  manifest["n"] = ds.n();
  manifest["grid"] = "k_over_n";
  manifest["responses"] = responses_name;
  manifest["covariates"] = cov_pattern;
  manifest["encoding"] = encoding_name(encoding);
  std::ofstream os(dir / "manifest.json");
  if (!os) throw DataError("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + (dir / "manifest.json").string());
}

FunctionalDataset load_dataset(const std::filesystem::path& path) {
  std::filesystem::path manifest_path = path;
  if (std::filesystem::is_directory(path)) manifest_path = path / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw DataError("cannot open manifest: " + manifest_path.string());

  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  int N, p, n;
  std::string grid, responses_name, cov_pattern, encoding_str;
  try {
    N = manifest.at("N").get<int>();
    p = manifest.at("p").get<int>();
    n = manifest.at("n").get<int>();
    grid = manifest.at("grid").get<std::string>();
    responses_name = manifest.at("responses").get<std::string>();
    cov_pattern = manifest.at("covariates").get<std::string>();
    encoding_str = manifest.at("encoding").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (N < 1 || p < 1 || n < 2) throw DataError("manifest declares invalid dimensions");
  if (grid != "k_over_n") throw DataError("unsupported grid convention '" + grid + "'");
  const Encoding encoding = parse_encoding(encoding_str);
  const std::filesystem::path dir = manifest_path.parent_path();

  Eigen::MatrixXd resp_mat;
  if (encoding == Encoding::kCsv)
    resp_mat = io::read_matrix_csv(dir / responses_name, {"y"});
  else
    resp_mat = io::read_matrix_f64le(dir / responses_name);
  if (resp_mat.cols() != 1)
    throw DataError("responses file has " + std::to_string(resp_mat.cols()) + " columns, expected 1");
  if (resp_mat.rows() != N)
    throw DataError("dimension mismatch: manifest N=" + std::to_string(N) + " but responses file has " +
                    std::to_string(resp_mat.rows()) + " rows");

  std::vector<Eigen::MatrixXd> covariates;
  covariates.reserve(static_cast<std::size_t>(p));
  const bool per_covariate = cov_pattern.find("{j}") != std::string::npos;
  if (per_covariate) {
    for (int j = 0; j < p; ++j) {
      const auto file = dir / substitute_index(cov_pattern, j);
      Eigen::MatrixXd mat = encoding == Encoding::kCsv
                                ? io::read_matrix_csv(file, io::grid_header(n))
                                : io::read_matrix_f64le(file);
      if (mat.rows() != N || mat.cols() != n)
        throw DataError("dimension mismatch in " + file.string() + ": got " +
                        std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()) +
                        ", expected " + std::to_string(N) + "x" + std::to_string(n));
      covariates.push_back(std::move(mat));
    }
  } else {
    if (encoding != Encoding::kF64le)
      throw DataError("single-file covariates require f64le encoding (pattern missing {j})");
    Eigen::MatrixXd stacked = io::read_matrix_f64le(dir / cov_pattern);
    if (stacked.rows() != static_cast<Eigen::Index>(p) * N || stacked.cols() != n)
      throw DataError("dimension mismatch in stacked covariates: got " +
                      std::to_string(stacked.rows()) + "x" + std::to_string(stacked.cols()) +
                      ", expected " + std::to_string(p * N) + "x" + std::to_string(n));
    for (int j = 0; j < p; ++j)
      covariates.emplace_back(stacked.middleRows(static_cast<Eigen::Index>(j) * N, N));
  }

  return FunctionalDataset(std::move(covariates), resp_mat.col(0));
}

}  // namespace fusso
