#include "fusso/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fusso/basis.hpp"
#include "fusso/errors.hpp"
#include "fusso/io.hpp"
#include "fusso/rng.hpp"

namespace fusso {

namespace {

using nlohmann::json;

Eigen::VectorXd design_predict(const Eigen::MatrixXd& design, int p, int M, int stride,
                               const Eigen::VectorXd& beta) {
  Eigen::VectorXd yhat = Eigen::VectorXd::Zero(design.rows());
  for (int j = 0; j < p; ++j) {
    const auto bj = beta.segment(static_cast<Eigen::Index>(j) * M, M);
    if ((bj.array() == 0.0).all()) continue;
    yhat.noalias() += design.middleCols(static_cast<Eigen::Index>(j) * stride, M) * bj;
  }
  return yhat;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& mat, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), mat.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = mat.row(rows[i]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

// Contiguous copy of the first M columns of every block.
Eigen::MatrixXd pack_blocks(const Eigen::MatrixXd& design, int p, int M, int stride) {
  Eigen::MatrixXd out(design.rows(), static_cast<Eigen::Index>(p) * M);
  for (int j = 0; j < p; ++j)
    out.middleCols(static_cast<Eigen::Index>(j) * M, M) =
        design.middleCols(static_cast<Eigen::Index>(j) * stride, M);
  return out;
}

struct Transform {
  bool intercept = false;
  bool standardize = false;
  double y_mean = 0.0;
  Eigen::RowVectorXd col_means;   // valid when intercept
  Eigen::RowVectorXd col_scales;  // valid when standardize
};

// Centers/scales a contiguous design and response in place.
Transform apply_transform(Eigen::MatrixXd& X, Eigen::VectorXd& y, bool intercept,
                          bool standardize) {
  Transform t;
  t.intercept = intercept;
  t.standardize = standardize;
  if (intercept) {
    t.y_mean = y.mean();
    y.array() -= t.y_mean;
    t.col_means = X.colwise().mean();
    X.rowwise() -= t.col_means;
  }
  if (standardize) {
    t.col_scales.resize(X.cols());
    const double inv_n = 1.0 / static_cast<double>(X.rows());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const double s = std::sqrt(X.col(c).squaredNorm() * inv_n);
      t.col_scales[c] = s > 0.0 ? s : 1.0;
      X.col(c) /= t.col_scales[c];
    }
  }
  return t;
}

// Returns beta in original coordinates plus the intercept.
std::pair<Eigen::VectorXd, double> undo_transform(const Transform& t, const Eigen::VectorXd& beta) {
  Eigen::VectorXd b = beta;
  if (t.standardize) b = b.cwiseQuotient(t.col_scales.transpose());
  double intercept = 0.0;
  if (t.intercept) intercept = t.y_mean - t.col_means * b;
  return {std::move(b), intercept};
}

struct Solved {
  FitResult fit;
  double intercept = 0.0;
};

// Single fit on a packed design view; handles the optional centering and
// scaling with back-transformed coefficients.
Solved solve_blocks(const std::shared_ptr<const Eigen::MatrixXd>& design, const Eigen::VectorXd& y,
                    int p, int M, int stride, double lambda, const FussoConfig& cfg) {
  if (!cfg.intercept && !cfg.standardize) {
    GroupProblem prob(design, y, p, M, stride);
    return {fit(prob, lambda, nullptr, cfg.solver), 0.0};
  }
  Eigen::MatrixXd X = pack_blocks(*design, p, M, stride);
  Eigen::VectorXd yy = y;
  const Transform t = apply_transform(X, yy, cfg.intercept, cfg.standardize);
  GroupProblem prob(std::move(X), std::move(yy), p, M);
  FitResult f = fit(prob, lambda, nullptr, cfg.solver);
  auto [beta, intercept] = undo_transform(t, f.beta);
  f.beta = std::move(beta);
  f.support = support_of(f.beta, p, M);
  return {std::move(f), intercept};
}

std::vector<int> checked_M_grid(std::vector<int> grid, int stride) {
  if (grid.empty()) throw std::invalid_argument("cross-validation: empty M grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 1 || grid.back() > stride)
    throw std::invalid_argument("cross-validation: M grid entries must lie in [1, " +
                                std::to_string(stride) + "]");
  return grid;
}

}  // namespace

std::vector<int> auto_M_grid(int n) {
  const int cap = n - 1;
  if (cap < 1) throw std::invalid_argument("auto_M_grid: n must be >= 2");
  std::vector<int> grid;
  for (int m = 1; m <= std::min(4, cap); ++m) grid.push_back(m);
  int v = 4;
  while (v < cap) {
    v = std::min(cap, (3 * v + 1) / 2);
    grid.push_back(v);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CvResult cross_validate_design(const std::shared_ptr<const Eigen::MatrixXd>& design,
                               const Eigen::VectorXd& y, int p, int stride,
                               const std::vector<int>& M_grid_in,
                               const std::vector<double>& lambda_grid, const FussoConfig& cfg) {
  const int N = static_cast<int>(y.size());
  const int K = cfg.cv_folds;
  if (K < 2) throw std::invalid_argument("cross-validation: cv_folds must be >= 2");
  if (K > N)
    throw std::invalid_argument("cross-validation requested with N=" + std::to_string(N) +
                                " < cv_folds=" + std::to_string(K));
  const std::vector<int> M_grid = checked_M_grid(M_grid_in, stride);

  // One lambda sequence per M: either the explicit grid or a default grid
  // anchored at the full-data lambda_max for that truncation.
  std::vector<std::vector<double>> lambdas_for_M;
  for (int M : M_grid) {
    if (!lambda_grid.empty()) {
      std::vector<double> lams = lambda_grid;
      std::sort(lams.begin(), lams.end(), std::greater<>());
      lams.erase(std::unique(lams.begin(), lams.end()), lams.end());
      lambdas_for_M.push_back(std::move(lams));
    } else {
      GroupProblem full(design, y, p, M, stride);
      const Eigen::VectorXd lams = lambda_grid_values(lambda_max(full), cfg.lambda_grid);
      lambdas_for_M.emplace_back(lams.data(), lams.data() + lams.size());
    }
  }

  // Contiguous fold blocks of a seeded shuffle.
  Rng shuffle_rng(derive_seed(cfg.cv_seed, {kStreamCvFolds}));
  const std::vector<int> perm = shuffle_rng.permutation(N);
  std::vector<std::vector<int>> fold_rows(static_cast<std::size_t>(K));
  for (int f = 0; f < K; ++f) {
    const int begin = static_cast<int>(static_cast<long long>(f) * N / K);
    const int end = static_cast<int>(static_cast<long long>(f + 1) * N / K);
    fold_rows[static_cast<std::size_t>(f)].assign(perm.begin() + begin, perm.begin() + end);
  }

  // mse[M_idx][lambda_idx][fold]
  std::vector<std::vector<std::vector<double>>> mse(M_grid.size());
  for (std::size_t mi = 0; mi < M_grid.size(); ++mi)
    mse[mi].assign(lambdas_for_M[mi].size(), std::vector<double>(static_cast<std::size_t>(K), 0.0));

  for (int f = 0; f < K; ++f) {
    std::vector<int> train_rows;
    train_rows.reserve(static_cast<std::size_t>(N));
    for (int g = 0; g < K; ++g)
      if (g != f)
        train_rows.insert(train_rows.end(), fold_rows[static_cast<std::size_t>(g)].begin(),
                          fold_rows[static_cast<std::size_t>(g)].end());
    const std::vector<int>& test_rows = fold_rows[static_cast<std::size_t>(f)];

    auto train_design = std::make_shared<const Eigen::MatrixXd>(gather_rows(*design, train_rows));
    const Eigen::MatrixXd test_design = gather_rows(*design, test_rows);
    const Eigen::VectorXd y_train = gather(y, train_rows);
    const Eigen::VectorXd y_test = gather(y, test_rows);

    for (std::size_t mi = 0; mi < M_grid.size(); ++mi) {
      const int M = M_grid[mi];
      const std::vector<double>& lams = lambdas_for_M[mi];

      Eigen::MatrixXd X;  // only used with transforms
      Eigen::MatrixXd test_X;
      Transform t;
      std::unique_ptr<GroupProblem> prob;
      int eval_stride = stride;
      const Eigen::MatrixXd* eval_design = &test_design;
      Eigen::VectorXd y_eval = y_test;
      if (cfg.intercept || cfg.standardize) {
        X = pack_blocks(*train_design, p, M, stride);
        Eigen::VectorXd yy = y_train;
        t = apply_transform(X, yy, cfg.intercept, cfg.standardize);
        test_X = pack_blocks(test_design, p, M, stride);
        if (cfg.intercept) {
          test_X.rowwise() -= t.col_means;
          y_eval.array() -= t.y_mean;
        }
        if (cfg.standardize)
          for (Eigen::Index c = 0; c < test_X.cols(); ++c) test_X.col(c) /= t.col_scales[c];
        prob = std::make_unique<GroupProblem>(std::move(X), std::move(yy), p, M);
        eval_stride = M;
        eval_design = &test_X;
      } else {
        prob = std::make_unique<GroupProblem>(train_design, y_train, p, M, stride);
      }

      const Eigen::VectorXd lips = block_lipschitz(*prob);
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p) * M);
      for (std::size_t li = 0; li < lams.size(); ++li) {
        const FitResult fr = fit(*prob, lams[li], &warm, cfg.solver, &lips);
        warm = fr.beta;
        const Eigen::VectorXd resid =
            y_eval - design_predict(*eval_design, p, M, eval_stride, fr.beta);
        mse[mi][li][static_cast<std::size_t>(f)] =
            resid.squaredNorm() / static_cast<double>(resid.size());
      }
    }
  }

  CvResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mi = 0; mi < M_grid.size(); ++mi) {
    for (std::size_t li = 0; li < lambdas_for_M[mi].size(); ++li) {
      const auto& folds = mse[mi][li];
      double mean = 0.0;
      for (double v : folds) mean += v;
      mean /= static_cast<double>(K);
      double var = 0.0;
      for (double v : folds) var += (v - mean) * (v - mean);
      const double se = std::sqrt(var / (K - 1)) / std::sqrt(static_cast<double>(K));
      out.table.push_back({M_grid[mi], lambdas_for_M[mi][li], mean, se});
      // Scan order is M ascending, lambda descending, so a strict comparison
      // breaks ties toward smaller M then larger lambda.
      if (mean < best) {
        best = mean;
        out.best_M = M_grid[mi];
        out.best_lambda = lambdas_for_M[mi][li];
      }
    }
  }
  return out;
}

CvResult cross_validate(const FunctionalDataset& ds, const FussoConfig& cfg,
                        std::vector<int> M_grid, std::vector<double> lambda_grid) {
  if (M_grid.empty()) M_grid = cfg.M_grid.empty() ? auto_M_grid(ds.n()) : cfg.M_grid;
  for (int M : M_grid)
    if (M > ds.n() - 1)
      throw std::invalid_argument("cross_validate: truncation M=" + std::to_string(M) +
                                  " too large for grid n=" + std::to_string(ds.n()));
  const int M_max = *std::max_element(M_grid.begin(), M_grid.end());
  const CoefficientTensor tensor = build_coefficients(ds, M_max);
  return cross_validate_design(tensor.shared(), ds.responses(), ds.p(), M_max, M_grid, lambda_grid,
                               cfg);
}

FussoModel fit_fusso(const FunctionalDataset& ds, const FussoConfig& cfg) {
  if (cfg.M && (*cfg.M < 1 || *cfg.M > ds.n() - 1))
    throw std::invalid_argument("fit_fusso: truncation M=" + std::to_string(*cfg.M) +
                                " must lie in [1, n-1] with n=" + std::to_string(ds.n()));
  if (cfg.lambda && *cfg.lambda < 0.0)
    throw std::invalid_argument("fit_fusso: lambda must be >= 0");

  int M;
  double lambda;
  if (cfg.M && cfg.lambda) {
    M = *cfg.M;
    lambda = *cfg.lambda;
  } else {
    std::vector<int> M_grid = cfg.M ? std::vector<int>{*cfg.M}
                                    : (cfg.M_grid.empty() ? auto_M_grid(ds.n()) : cfg.M_grid);
    std::vector<double> lams;
    if (cfg.lambda) lams.push_back(*cfg.lambda);
    const CvResult cv = cross_validate(ds, cfg, std::move(M_grid), std::move(lams));
    M = cv.best_M;
    lambda = cv.best_lambda;
  }

  const CoefficientTensor tensor = build_coefficients(ds, M);
  Solved solved = solve_blocks(tensor.shared(), ds.responses(), ds.p(), M, M, lambda, cfg);

  FussoModel model;
  model.beta = std::move(solved.fit.beta);
  model.support = std::move(solved.fit.support);
  model.p = ds.p();
  model.M = M;
  model.n = ds.n();
  model.lambda = lambda;
  model.intercept = solved.intercept;
  model.objective = solved.fit.objective;
  model.kkt_residual = solved.fit.kkt_residual;
  model.iterations = solved.fit.iterations;
  model.converged = solved.fit.converged;
  return model;
}

double predict(const FussoModel& model, const std::vector<Eigen::VectorXd>& functions) {
  if (static_cast<int>(functions.size()) != model.p)
    throw DataError("predict: expected " + std::to_string(model.p) + " grid samples, got " +
                    std::to_string(functions.size()));
  for (std::size_t j = 0; j < functions.size(); ++j)
    if (static_cast<int>(functions[j].size()) != model.n)
      throw DataError("predict: covariate " + std::to_string(j) + " has grid size " +
                      std::to_string(functions[j].size()) + ", model was trained with n=" +
                      std::to_string(model.n));
  double yhat = model.intercept;
  for (int j : model.support) yhat += project(functions[static_cast<std::size_t>(j)], model.M).dot(model.block(j));
  return yhat;
}

Eigen::VectorXd predict_dataset(const FussoModel& model, const FunctionalDataset& ds) {
  if (ds.p() != model.p)
    throw DataError("predict: dataset has p=" + std::to_string(ds.p()) + ", model expects " +
                    std::to_string(model.p));
  if (ds.n() != model.n)
    throw DataError("predict: dataset grid size n=" + std::to_string(ds.n()) +
                    ", model was trained with n=" + std::to_string(model.n));
  Eigen::VectorXd yhat = Eigen::VectorXd::Constant(ds.N(), model.intercept);
  for (int j : model.support)
    yhat.noalias() += project_rows(ds.covariate(j), model.M) * model.block(j);
  return yhat;
}

FussoModel two_stage_refit(const FunctionalDataset& ds, const std::vector<int>& support, int M,
                           double lambda_small, const FussoConfig& cfg) {
  if (support.empty()) throw std::invalid_argument("two_stage_refit: empty support");
  if (lambda_small < 0.0) throw std::invalid_argument("two_stage_refit: lambda must be >= 0");
  std::vector<int> s = support;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (s.front() < 0 || s.back() >= ds.p())
    throw std::invalid_argument("two_stage_refit: support index out of range");

  const CoefficientTensor tensor = build_coefficients(ds, M);
  const int ns = static_cast<int>(s.size());
  Eigen::MatrixXd restricted(ds.N(), static_cast<Eigen::Index>(ns) * M);
  for (int k = 0; k < ns; ++k)
    restricted.middleCols(static_cast<Eigen::Index>(k) * M, M) =
        tensor.flat().middleCols(static_cast<Eigen::Index>(s[static_cast<std::size_t>(k)]) * M, M);

  Solved solved = solve_blocks(std::make_shared<const Eigen::MatrixXd>(std::move(restricted)),
                               ds.responses(), ns, M, M, lambda_small, cfg);

  FussoModel model;
  model.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds.p()) * M);
  for (int k = 0; k < ns; ++k)
    model.beta.segment(static_cast<Eigen::Index>(s[static_cast<std::size_t>(k)]) * M, M) =
        solved.fit.beta.segment(static_cast<Eigen::Index>(k) * M, M);
  model.support = support_of(model.beta, ds.p(), M);
  model.p = ds.p();
  model.M = M;
  model.n = ds.n();
  model.lambda = lambda_small;
  model.intercept = solved.intercept;
  model.objective = solved.fit.objective;
  model.kkt_residual = solved.fit.kkt_residual;
  model.iterations = solved.fit.iterations;
  model.converged = solved.fit.converged;
  return model;
}

FussoModel two_stage_refit(const FunctionalDataset& ds, const FussoModel& first_stage,
                           double lambda_small) {
  return two_stage_refit(ds, first_stage.support, first_stage.M, lambda_small, FussoConfig{});
}

Eigen::VectorXd recover_g(const FussoModel& model, int j,
                          const Eigen::Ref<const Eigen::VectorXd>& grid) {
  if (j < 0 || j >= model.p) throw std::invalid_argument("recover_g: block index out of range");
  return reconstruct(model.block(j), grid);
}

GroupProblem ygl_problem(const FunctionalDataset& ds) {
  const int n = ds.n();
  Eigen::MatrixXd design(ds.N(), static_cast<Eigen::Index>(ds.p()) * n);
  for (int j = 0; j < ds.p(); ++j)
    design.middleCols(static_cast<Eigen::Index>(j) * n, n) = ds.covariate(j) / static_cast<double>(n);
  return GroupProblem(std::move(design), ds.responses(), ds.p(), n);
}

FitResult fit_ygl(const FunctionalDataset& ds, double lambda, const SolveOptions& opts) {
  const GroupProblem prob = ygl_problem(ds);
  return fit(prob, lambda, nullptr, opts);
}

void save_model(const FussoModel& model, const std::filesystem::path& path) {
  json j;
  j["basis"] = "trigonometric";
  j["n"] = model.n;
  j["p"] = model.p;
  j["M"] = model.M;
  j["lambda"] = model.lambda;
  j["intercept"] = model.intercept;
  j["support"] = model.support;

  const std::size_t payload = model.support.size() * static_cast<std::size_t>(model.M);
  if (payload <= 4096) {
    json blocks = json::array();
    for (int idx : model.support) {
      const Eigen::VectorXd b = model.block(idx);
      json row = json::array();
      for (Eigen::Index m = 0; m < b.size(); ++m) row.push_back(b[m]);
      blocks.push_back(std::move(row));
    }
    j["beta"] = std::move(blocks);
  } else {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(model.support.size()), model.M);
    for (std::size_t k = 0; k < model.support.size(); ++k)
      rows.row(static_cast<Eigen::Index>(k)) = model.block(model.support[k]).transpose();
    const std::string sidecar = path.filename().string() + ".beta.f64le";
    io::write_matrix_f64le(path.parent_path() / sidecar, rows);
    j["beta"] = json{{"file", sidecar}, {"storage", "support"}};
  }

  std::ofstream os(path);
  if (!os) throw DataError("cannot write model file: " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

FussoModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open model file: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }

  FussoModel model;
  try {
    if (j.at("basis").get<std::string>() != "trigonometric")
      throw DataError("model file: unsupported basis '" + j.at("basis").get<std::string>() + "'");
    model.n = j.at("n").get<int>();
    model.p = j.at("p").get<int>();
    model.M = j.at("M").get<int>();
    model.lambda = j.at("lambda").get<double>();
    model.intercept = j.at("intercept").get<double>();
    model.support = j.at("support").get<std::vector<int>>();
    if (model.p < 1 || model.M < 1 || model.n < 2) throw DataError("model file: invalid dimensions");
    for (int idx : model.support)
      if (idx < 0 || idx >= model.p) throw DataError("model file: support index out of range");

    model.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.p) * model.M);
    const auto& beta = j.at("beta");
    if (beta.is_object()) {
      const Eigen::MatrixXd rows =
          io::read_matrix_f64le(path.parent_path() / beta.at("file").get<std::string>());
      const std::string storage = beta.at("storage").get<std::string>();
      if (storage == "support") {
        if (rows.rows() != static_cast<Eigen::Index>(model.support.size()) || rows.cols() != model.M)
          throw DataError("model file: beta sidecar dimensions mismatch");
        for (std::size_t k = 0; k < model.support.size(); ++k)
          model.beta.segment(static_cast<Eigen::Index>(model.support[k]) * model.M, model.M) =
              rows.row(static_cast<Eigen::Index>(k)).transpose();
      } else if (storage == "dense") {
        if (rows.rows() != model.p || rows.cols() != model.M)
          throw DataError("model file: beta sidecar dimensions mismatch");
        for (int jdx = 0; jdx < model.p; ++jdx)
          model.beta.segment(static_cast<Eigen::Index>(jdx) * model.M, model.M) =
              rows.row(jdx).transpose();
      } else {
        throw DataError("model file: unknown beta storage '" + storage + "'");
      }
    } else {
      const bool dense = beta.size() == static_cast<std::size_t>(model.p);
      if (!dense && beta.size() != model.support.size())
        throw DataError("model file: beta must have p rows (dense) or one per support block");
      for (std::size_t k = 0; k < beta.size(); ++k) {
        const int idx = dense ? static_cast<int>(k) : model.support[k];
        const auto& row = beta.at(k);
        if (static_cast<int>(row.size()) != model.M)
          throw DataError("model file: beta block has wrong length");
        for (int m = 0; m < model.M; ++m)
          model.beta[static_cast<Eigen::Index>(idx) * model.M + m] =
              row.at(static_cast<std::size_t>(m)).get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }

  if (!model.beta.allFinite()) throw DataError("model file: non-finite coefficient");
  const std::vector<int> actual = support_of(model.beta, model.p, model.M);
  if (actual != model.support)
    throw DataError("model file: support field disagrees with nonzero beta blocks");
  return model;
}

}  // namespace fusso
