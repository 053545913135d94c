#include "fusso/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fusso/dataset.hpp"
#include "fusso/errors.hpp"
#include "fusso/estimator.hpp"
#include "fusso/io.hpp"
#include "fusso/metrics.hpp"
#include "fusso/synth.hpp"
#include "fusso/version.hpp"

namespace fusso {

namespace {

using nlohmann::json;

// Values from --config <file.json>; keys use the canonical snake_case field
// names and are overridden by any flag given on the command line.
struct JsonConfig {
  json data = json::object();

  bool has(const std::string& key) const { return data.contains(key); }

  template <class T>
  void apply(const std::string& key, T& out) const {
    if (data.contains(key)) {
      try {
        out = data.at(key).get<T>();
      } catch (const json::exception& e) {
        throw DataError("config value '" + key + "': " + e.what());
      }
    }
  }
};

JsonConfig load_config(int argc, const char* const* argv) {
  JsonConfig cfg;
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
      break;
    }
    if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
      break;
    }
  }
  if (path.empty()) return cfg;
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config file: " + path);
  try {
    is >> cfg.data;
  } catch (const json::exception& e) {
    throw DataError("malformed config file " + path + ": " + e.what());
  }
  if (!cfg.data.is_object()) throw DataError("config file must hold a JSON object");
  return cfg;
}

json versions_json() {
  json v;
  v["fusso"] = kVersion;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  return v;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_manifest(const std::filesystem::path& path, const std::string& command, json options,
                    const Stopwatch& watch, json extra = json::object()) {
  json m;
  m["command"] = command;
  m["options"] = std::move(options);
  m["versions"] = versions_json();
  for (auto& [k, v] : extra.items()) m[k] = v;
  m["timings"] = json{{"seconds", watch.seconds()}};
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest: " + path.string());
  os << m.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

json spec_options(const SynthSpec& spec) {
  return json{{"N", spec.N},
              {"n", spec.n},
              {"p", spec.p},
              {"s", spec.s},
              {"M_gen", spec.M_gen},
              {"sigma_xi", spec.sigma_xi},
              {"sigma_eps_sq", spec.sigma_eps_sq},
              {"gamma_weight", spec.gamma_weight},
              {"seed", spec.seed}};
}

json solver_options(const SolveOptions& s) {
  return json{{"tol", s.tol}, {"max_iter", s.max_iter}};
}

json grid_options(const LambdaGrid& g) {
  json j{{"lambda_count", g.count}, {"lambda_ratio", g.ratio}};
  if (!g.explicit_lambdas.empty()) j["lambdas"] = g.explicit_lambdas;
  return j;
}

void note_aliasing(const SynthSpec& spec) {
  if (spec.M_gen > spec.n - 1)
    std::cerr << "note: M_gen=" << spec.M_gen << " exceeds n-1=" << spec.n - 1
              << "; generated functions alias on the sampling grid\n";
}

// Shared flag bundle for commands that run the solver.
struct SolverFlags {
  SolveOptions solver;
  LambdaGrid grid;
  std::vector<double> explicit_lambdas;

  void attach(CLI::App* cmd, const JsonConfig& cfg) {
    cfg.apply("tol", solver.tol);
    cfg.apply("max_iter", solver.max_iter);
    cfg.apply("lambda_count", grid.count);
    cfg.apply("lambda_ratio", grid.ratio);
    cfg.apply("lambdas", explicit_lambdas);
    cmd->add_option("--tol", solver.tol, "solver KKT tolerance");
    cmd->add_option("--max_iter,--max-iter", solver.max_iter, "max coordinate-descent sweeps");
    cmd->add_option("--lambda_count,--lambda-count", grid.count, "points in the lambda grid")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda_ratio,--lambda-ratio", grid.ratio,
                    "smallest lambda as a fraction of lambda_max");
    cmd->add_option("--lambdas", explicit_lambdas, "explicit lambda grid (descending)")
        ->delimiter(',');
  }

  LambdaGrid resolved_grid() const {
    LambdaGrid g = grid;
    g.explicit_lambdas = explicit_lambdas;
    return g;
  }
};

std::string format_lambda_norm_row(double lambda, const Eigen::VectorXd& beta, int p, int M) {
  std::string row = io::format_double(lambda);
  for (int j = 0; j < p; ++j) {
    row += ',';
    row += io::format_double(beta.segment(static_cast<Eigen::Index>(j) * M, M).norm());
  }
  return row;
}

int cmd_synth(const SynthSpec& spec, const std::string& out, const std::string& format) {
  Stopwatch watch;
  spec.validate();
  note_aliasing(spec);
  const SynthInstance inst = gen_instance(spec);
  const std::filesystem::path dir(out);
  save_dataset(inst.dataset, dir, parse_encoding(format));
  save_truth(dir / "truth.json", spec, inst.beta_star, inst.true_support);
  json options = spec_options(spec);
  options["format"] = format;
  options["out"] = out;
  write_manifest(dir / "run_manifest.json", "synth", options, watch);
  std::cout << "wrote dataset (N=" << spec.N << ", p=" << spec.p << ", n=" << spec.n << ") to "
            << out << "\n";
  return 0;
}

struct FitFlags {
  std::string data;
  std::string out = "model.json";
  int M = 0;
  double lambda = 0.0;
  bool has_M = false;
  bool has_lambda = false;
  FussoConfig cfg;
  std::vector<int> M_grid;
};

int cmd_fit(const FitFlags& f, const SolverFlags& sf) {
  Stopwatch watch;
  const FunctionalDataset ds = load_dataset(f.data);
  FussoConfig cfg = f.cfg;
  cfg.solver = sf.solver;
  cfg.lambda_grid = sf.resolved_grid();
  cfg.M_grid = f.M_grid;
  if (f.has_M) cfg.M = f.M;
  if (f.has_lambda) cfg.lambda = f.lambda;

  const FussoModel model = fit_fusso(ds, cfg);
  if (!model.converged) {
    std::cerr << "error: solver did not converge within " << cfg.solver.max_iter
              << " sweeps (kkt residual " << model.kkt_residual << ")\n";
    return 4;
  }
  save_model(model, f.out);

  json options{{"data", f.data},         {"out", f.out},
               {"cv_folds", cfg.cv_folds}, {"standardize", cfg.standardize},
               {"intercept", cfg.intercept}, {"cv_seed", cfg.cv_seed}};
  options["solver"] = solver_options(cfg.solver);
  options["lambda_grid"] = grid_options(cfg.lambda_grid);
  if (f.has_M) options["M"] = f.M;
  if (f.has_lambda) options["lambda"] = f.lambda;
  if (!f.M_grid.empty()) options["M_grid"] = f.M_grid;
  json extra{{"selected", json{{"M", model.M}, {"lambda", model.lambda}}},
             {"diagnostics", json{{"objective", model.objective},
                                  {"kkt_residual", model.kkt_residual},
                                  {"iterations", model.iterations},
                                  {"support_size", model.support.size()}}}};
  write_manifest(f.out + ".manifest.json", "fit", options, watch, extra);
  std::cout << "fit: M=" << model.M << " lambda=" << model.lambda << " support="
            << model.support.size() << " objective=" << model.objective << "\n";
  return 0;
}

struct PathFlags {
  std::string data;
  std::string out = "path.csv";
  int M = 0;
  bool has_M = false;
  std::string path_format = "auto";  // dense | sparse | auto
  FussoConfig cfg;
  std::vector<int> M_grid;
};

int cmd_path(const PathFlags& f, const SolverFlags& sf) {
  Stopwatch watch;
  const FunctionalDataset ds = load_dataset(f.data);
  FussoConfig cfg = f.cfg;
  cfg.solver = sf.solver;
  cfg.lambda_grid = sf.resolved_grid();
  cfg.M_grid = f.M_grid;

  int M;
  if (f.has_M) {
    M = f.M;
  } else {
    const CvResult cv = cross_validate(ds, cfg, f.M_grid, {});
    M = cv.best_M;
    std::cout << "cross-validation selected M=" << M << "\n";
  }

  const CoefficientTensor tensor = build_coefficients(ds, M);
  GroupProblem prob(tensor.shared(), ds.responses(), ds.p(), M, M);
  const PathResult path = fit_path(prob, cfg.lambda_grid, cfg.solver);
  for (const FitResult& fr : path.fits)
    if (!fr.converged) {
      std::cerr << "error: path fit at lambda=" << fr.lambda << " did not converge\n";
      return 4;
    }

  const bool sparse = f.path_format == "sparse" || (f.path_format == "auto" && ds.p() > 1000);
  std::ofstream os(f.out);
  if (!os) throw DataError("cannot open for writing: " + f.out);
  if (sparse) {
    os << "lambda,block,norm\n";
    for (std::size_t i = 0; i < path.fits.size(); ++i) {
      const FitResult& fr = path.fits[i];
      for (int j : fr.support)
        os << io::format_double(path.lambdas[static_cast<Eigen::Index>(i)]) << ',' << j << ','
           << io::format_double(fr.beta.segment(static_cast<Eigen::Index>(j) * M, M).norm())
           << '\n';
    }
  } else {
    os << "lambda";
    for (int j = 1; j <= ds.p(); ++j) os << ",beta_norm_" << j;
    os << '\n';
    for (std::size_t i = 0; i < path.fits.size(); ++i)
      os << format_lambda_norm_row(path.lambdas[static_cast<Eigen::Index>(i)], path.fits[i].beta,
                                   ds.p(), M)
         << '\n';
  }
  if (!os) throw DataError("write failed: " + f.out);

  json options{{"data", f.data}, {"out", f.out}, {"M", M}, {"path_format", sparse ? "sparse" : "dense"}};
  options["solver"] = solver_options(cfg.solver);
  options["lambda_grid"] = grid_options(cfg.lambda_grid);
  write_manifest(f.out + ".manifest.json", "path", options, watch,
                 json{{"lambda_max", path.lambda_max}});
  return 0;
}

struct CvFlags {
  std::string data;
  std::string out = "cv.csv";
  FussoConfig cfg;
  std::vector<int> M_grid;
};

int cmd_cv(const CvFlags& f, const SolverFlags& sf) {
  Stopwatch watch;
  const FunctionalDataset ds = load_dataset(f.data);
  FussoConfig cfg = f.cfg;
  cfg.solver = sf.solver;
  cfg.lambda_grid = sf.resolved_grid();

  const CvResult res = cross_validate(ds, cfg, f.M_grid, sf.explicit_lambdas);

  std::ofstream os(f.out);
  if (!os) throw DataError("cannot open for writing: " + f.out);
  os << "M,lambda,mean_mse,se\n";
  for (const CvEntry& e : res.table)
    os << e.M << ',' << io::format_double(e.lambda) << ',' << io::format_double(e.mean_mse) << ','
       << io::format_double(e.se) << '\n';
  if (!os) throw DataError("write failed: " + f.out);

  json options{{"data", f.data},
               {"out", f.out},
               {"cv_folds", cfg.cv_folds},
               {"cv_seed", cfg.cv_seed}};
  options["solver"] = solver_options(cfg.solver);
  options["lambda_grid"] = grid_options(cfg.lambda_grid);
  if (!f.M_grid.empty()) options["M_grid"] = f.M_grid;
  write_manifest(f.out + ".manifest.json", "cv", options, watch,
                 json{{"best", json{{"M", res.best_M}, {"lambda", res.best_lambda}}}});
  std::cout << "cv: best M=" << res.best_M << " lambda=" << res.best_lambda << "\n";
  return 0;
}

struct BenchFlags {
  SynthSpec spec;
  int trials = 100;
  std::string estimator = "fusso";
  std::string out = "bench.csv";
  int fixed_M = 0;
  bool has_fixed_M = false;
  int cv_folds = 5;
  std::vector<int> M_grid;
  int threads = 1;
};

int cmd_bench(const BenchFlags& f, const SolverFlags& sf) {
  Stopwatch watch;
  f.spec.validate();
  note_aliasing(f.spec);
  BenchmarkOptions opts;
  opts.estimator = parse_estimator(f.estimator);
  if (f.has_fixed_M) opts.fixed_M = f.fixed_M;
  opts.M_grid = f.M_grid;
  opts.cv_folds = f.cv_folds;
  opts.lambda_grid = sf.resolved_grid();
  opts.solver = sf.solver;
  opts.threads = f.threads;

  const BenchmarkRow row = run_benchmark(f.spec, f.trials, opts);

  std::ofstream os(f.out);
  if (!os) throw DataError("cannot open for writing: " + f.out);
  os << "p,N,n,s,trials,estimator,r,delta_lambda,seed\n";
  os << row.p << ',' << row.N << ',' << row.n << ',' << row.s << ',' << row.trials << ','
     << row.estimator << ',' << io::format_double(row.r) << ','
     << io::format_double(row.delta_lambda) << ',' << row.seed << '\n';
  if (!os) throw DataError("write failed: " + f.out);

  json options = spec_options(f.spec);
  options["trials"] = f.trials;
  options["estimator"] = f.estimator;
  options["cv_folds"] = f.cv_folds;
  options["threads"] = f.threads;
  options["out"] = f.out;
  if (f.has_fixed_M) options["M"] = f.fixed_M;
  if (!f.M_grid.empty()) options["M_grid"] = f.M_grid;
  options["solver"] = solver_options(sf.solver);
  options["lambda_grid"] = grid_options(opts.lambda_grid);
  write_manifest(f.out + ".manifest.json", "bench", options, watch,
                 json{{"r", row.r}, {"delta_lambda", row.delta_lambda}});
  std::cout << "bench: estimator=" << row.estimator << " r=" << row.r
            << " delta_lambda=" << row.delta_lambda << "\n";
  return 0;
}

struct PredictFlags {
  std::string data;
  std::string model;
  std::string out = "predictions.csv";
};

int cmd_predict(const PredictFlags& f) {
  Stopwatch watch;
  const FunctionalDataset ds = load_dataset(f.data);
  const FussoModel model = load_model(f.model);
  const Eigen::VectorXd yhat = predict_dataset(model, ds);

  std::ofstream os(f.out);
  if (!os) throw DataError("cannot open for writing: " + f.out);
  os << "index,y_hat\n";
  for (Eigen::Index i = 0; i < yhat.size(); ++i)
    os << i << ',' << io::format_double(yhat[i]) << '\n';
  if (!os) throw DataError("write failed: " + f.out);

  write_manifest(f.out + ".manifest.json", "predict",
                 json{{"data", f.data}, {"model", f.model}, {"out", f.out}}, watch);
  return 0;
}

void attach_spec_flags(CLI::App* cmd, SynthSpec& spec, const JsonConfig& cfg) {
  cfg.apply("N", spec.N);
  cfg.apply("n", spec.n);
  cfg.apply("p", spec.p);
  cfg.apply("s", spec.s);
  cfg.apply("M_gen", spec.M_gen);
  cfg.apply("sigma_xi", spec.sigma_xi);
  cfg.apply("sigma_eps_sq", spec.sigma_eps_sq);
  cfg.apply("gamma_weight", spec.gamma_weight);
  cfg.apply("seed", spec.seed);
  auto require_unless_config = [&cfg](CLI::Option* opt, const char* key) {
    if (!cfg.has(key)) opt->required();
  };
  require_unless_config(cmd->add_option("--p", spec.p, "number of functional covariates"), "p");
  require_unless_config(cmd->add_option("--N", spec.N, "number of instances"), "N");
  require_unless_config(cmd->add_option("--n", spec.n, "grid size per function"), "n");
  require_unless_config(cmd->add_option("--s", spec.s, "true support size"), "s");
  cmd->add_option("--M_gen,--M-gen", spec.M_gen, "coefficients in the generated functions");
  cmd->add_option("--sigma_xi,--sigma-xi", spec.sigma_xi, "grid-noise standard deviation");
  cmd->add_option("--sigma_eps_sq,--sigma-eps-sq", spec.sigma_eps_sq, "response-noise variance");
  cmd->add_option("--gamma_weight,--gamma-weight", spec.gamma_weight, "coefficient damping exponent");
  cmd->add_option("--seed", spec.seed, "RNG seed");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  try {
    const JsonConfig cfg = load_config(argc, argv);

    CLI::App app{"FuSSO: sparse regression of a scalar response on functional covariates"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");

    // synth
    SynthSpec synth_spec;
    std::string synth_out = "dataset";
    std::string synth_format = "csv";
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset with planted truth");
    attach_spec_flags(synth_cmd, synth_spec, cfg);
    cfg.apply("out", synth_out);
    cfg.apply("format", synth_format);
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--format", synth_format, "dataset encoding")
        ->check(CLI::IsMember({"csv", "f64le"}));

    // shared solver flags per command
    SolverFlags fit_sf, path_sf, cv_sf, bench_sf;

    // fit
    FitFlags fit_flags;
    auto* fit_cmd = app.add_subcommand("fit", "fit a FuSSO model (CV for M/lambda unless given)");
    cfg.apply("data", fit_flags.data);
    cfg.apply("out", fit_flags.out);
    cfg.apply("cv_folds", fit_flags.cfg.cv_folds);
    cfg.apply("cv_seed", fit_flags.cfg.cv_seed);
    cfg.apply("standardize", fit_flags.cfg.standardize);
    cfg.apply("intercept", fit_flags.cfg.intercept);
    cfg.apply("M_grid", fit_flags.M_grid);
    if (cfg.has("M")) {
      cfg.apply("M", fit_flags.M);
      fit_flags.has_M = true;
    }
    if (cfg.has("lambda")) {
      cfg.apply("lambda", fit_flags.lambda);
      fit_flags.has_lambda = true;
    }
    auto* fit_data_opt = fit_cmd->add_option("--data", fit_flags.data, "dataset manifest or directory");
    if (!cfg.has("data")) fit_data_opt->required();
    fit_cmd->add_option("--out", fit_flags.out, "model file to write");
    auto* fit_M_opt = fit_cmd->add_option("--M", fit_flags.M, "basis truncation (omit to cross-validate)");
    auto* fit_lambda_opt =
        fit_cmd->add_option("--lambda", fit_flags.lambda, "penalty level (omit to cross-validate)");
    fit_cmd->add_option("--cv_folds,--folds", fit_flags.cfg.cv_folds, "cross-validation folds");
    fit_cmd->add_option("--cv_seed,--cv-seed", fit_flags.cfg.cv_seed, "fold shuffle seed");
    fit_cmd->add_option("--M_grid,--M-grid", fit_flags.M_grid, "CV truncation candidates")
        ->delimiter(',');
    fit_cmd->add_flag("--standardize", fit_flags.cfg.standardize, "scale design columns to unit RMS");
    fit_cmd->add_flag("--intercept", fit_flags.cfg.intercept, "fit an intercept");
    fit_sf.attach(fit_cmd, cfg);

    // path
    PathFlags path_flags;
    auto* path_cmd = app.add_subcommand("path", "regularization path of block norms");
    cfg.apply("data", path_flags.data);
    if (cfg.has("M")) {
      cfg.apply("M", path_flags.M);
      path_flags.has_M = true;
    }
    cfg.apply("path_format", path_flags.path_format);
    auto* path_data_opt =
        path_cmd->add_option("--data", path_flags.data, "dataset manifest or directory");
    if (!cfg.has("data")) path_data_opt->required();
    path_cmd->add_option("--out", path_flags.out, "path CSV to write");
    auto* path_M_opt =
        path_cmd->add_option("--M", path_flags.M, "basis truncation (omit to cross-validate)");
    path_cmd->add_option("--path_format,--path-format", path_flags.path_format,
                         "dense, sparse, or auto (sparse when p > 1000)")
        ->check(CLI::IsMember({"dense", "sparse", "auto"}));
    path_cmd->add_option("--cv_folds,--folds", path_flags.cfg.cv_folds, "cross-validation folds");
    path_cmd->add_option("--cv_seed,--cv-seed", path_flags.cfg.cv_seed, "fold shuffle seed");
    path_cmd->add_option("--M_grid,--M-grid", path_flags.M_grid, "CV truncation candidates")
        ->delimiter(',');
    path_sf.attach(path_cmd, cfg);

    // cv
    CvFlags cv_flags;
    auto* cv_cmd = app.add_subcommand("cv", "cross-validation table over (M, lambda)");
    cfg.apply("data", cv_flags.data);
    cfg.apply("cv_folds", cv_flags.cfg.cv_folds);
    cfg.apply("cv_seed", cv_flags.cfg.cv_seed);
    cfg.apply("M_grid", cv_flags.M_grid);
    auto* cv_data_opt = cv_cmd->add_option("--data", cv_flags.data, "dataset manifest or directory");
    if (!cfg.has("data")) cv_data_opt->required();
    cv_cmd->add_option("--out", cv_flags.out, "CV table CSV to write");
    cv_cmd->add_option("--cv_folds,--folds", cv_flags.cfg.cv_folds, "cross-validation folds");
    cv_cmd->add_option("--cv_seed,--cv-seed", cv_flags.cfg.cv_seed, "fold shuffle seed");
    cv_cmd->add_option("--M_grid,--M-grid", cv_flags.M_grid, "CV truncation candidates")
        ->delimiter(',');
    cv_sf.attach(cv_cmd, cfg);

    // bench
    BenchFlags bench_flags;
    auto* bench_cmd = app.add_subcommand("bench", "Monte-Carlo support-recovery benchmark");
    attach_spec_flags(bench_cmd, bench_flags.spec, cfg);
    cfg.apply("trials", bench_flags.trials);
    cfg.apply("estimator", bench_flags.estimator);
    cfg.apply("out", bench_flags.out);
    cfg.apply("cv_folds", bench_flags.cv_folds);
    cfg.apply("M_grid", bench_flags.M_grid);
    cfg.apply("threads", bench_flags.threads);
    if (cfg.has("M")) {
      cfg.apply("M", bench_flags.fixed_M);
      bench_flags.has_fixed_M = true;
    }
    auto* trials_opt = bench_cmd->add_option("--trials", bench_flags.trials, "number of trials");
    trials_opt->check(CLI::PositiveNumber);
    if (!cfg.has("trials")) trials_opt->required();
    bench_cmd->add_option("--estimator", bench_flags.estimator, "estimator to benchmark")
        ->check(CLI::IsMember({"fusso", "ygl"}));
    bench_cmd->add_option("--out", bench_flags.out, "benchmark CSV to write");
    auto* bench_M_opt =
        bench_cmd->add_option("--M", bench_flags.fixed_M, "fixed truncation (omit for per-trial CV)");
    bench_cmd->add_option("--cv_folds,--folds", bench_flags.cv_folds, "cross-validation folds");
    bench_cmd->add_option("--M_grid,--M-grid", bench_flags.M_grid, "CV truncation candidates")
        ->delimiter(',');
    bench_cmd->add_option("--threads", bench_flags.threads, "parallel trials")
        ->check(CLI::PositiveNumber);
    bench_sf.attach(bench_cmd, cfg);

    // predict
    PredictFlags predict_flags;
    auto* predict_cmd = app.add_subcommand("predict", "predictions for every dataset instance");
    cfg.apply("data", predict_flags.data);
    cfg.apply("model", predict_flags.model);
    cfg.apply("out", predict_flags.out);
    auto* pr_data_opt =
        predict_cmd->add_option("--data", predict_flags.data, "dataset manifest or directory");
    if (!cfg.has("data")) pr_data_opt->required();
    auto* pr_model_opt = predict_cmd->add_option("--model", predict_flags.model, "model JSON file");
    if (!cfg.has("model")) pr_model_opt->required();
    predict_cmd->add_option("--out", predict_flags.out, "predictions CSV to write");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }

    fit_flags.has_M = fit_flags.has_M || fit_M_opt->count() > 0;
    fit_flags.has_lambda = fit_flags.has_lambda || fit_lambda_opt->count() > 0;
    path_flags.has_M = path_flags.has_M || path_M_opt->count() > 0;
    bench_flags.has_fixed_M = bench_flags.has_fixed_M || bench_M_opt->count() > 0;

    if (synth_cmd->parsed()) return cmd_synth(synth_spec, synth_out, synth_format);
    if (fit_cmd->parsed()) return cmd_fit(fit_flags, fit_sf);
    if (path_cmd->parsed()) return cmd_path(path_flags, path_sf);
    if (cv_cmd->parsed()) return cmd_cv(cv_flags, cv_sf);
    if (bench_cmd->parsed()) return cmd_bench(bench_flags, bench_sf);
    if (predict_cmd->parsed()) return cmd_predict(predict_flags);
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fusso
