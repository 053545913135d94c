#include <doctest.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fusso/basis.hpp"
#include "fusso/dataset.hpp"
#include "fusso/errors.hpp"
#include "fusso/rng.hpp"
#include "oracles.hpp"

using namespace fusso;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("fusso_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
  fs::remove_all(dir);
  return dir;
}

FunctionalDataset random_dataset(Rng& rng, int N, int p, int n) {
  std::vector<Eigen::MatrixXd> covs;
  for (int j = 0; j < p; ++j) {
    Eigen::MatrixXd c(N, n);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < n; ++k) c(i, k) = rng.uniform_pm1();
    covs.push_back(std::move(c));
  }
  Eigen::VectorXd y(N);
  for (int i = 0; i < N; ++i) y[i] = 2.0 * rng.uniform_pm1();
  return FunctionalDataset(std::move(covs), std::move(y));
}

bool same_dataset(const FunctionalDataset& a, const FunctionalDataset& b) {
  if (a.N() != b.N() || a.p() != b.p() || a.n() != b.n()) return false;
  if (a.responses() != b.responses()) return false;
  for (int j = 0; j < a.p(); ++j)
    if (a.covariate(j) != b.covariate(j)) return false;
  return true;
}

}  // namespace

TEST_CASE("build_coefficients: zeros, basis recovery, oracle agreement") {
  SUBCASE("all-zero samples") {
    std::vector<Eigen::MatrixXd> covs{Eigen::MatrixXd::Zero(2, 6), Eigen::MatrixXd::Zero(2, 6)};
    FunctionalDataset ds(std::move(covs), Eigen::VectorXd::Zero(2));
    const CoefficientTensor t = build_coefficients(ds, 3);
    CHECK(t.flat().isZero(0.0));
  }
  SUBCASE("grid sample of phi_2 projects to e_2") {
    const int n = 8;
    Eigen::MatrixXd c(1, n);
    for (int k = 1; k <= n; ++k) c(0, k - 1) = eval_basis(2, static_cast<double>(k) / n);
    FunctionalDataset ds({c}, Eigen::VectorXd::Zero(1));
    const CoefficientTensor t = build_coefficients(ds, 3);
    const Eigen::VectorXd block = t.block(0, 0);
    CHECK(block[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(block[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(block[2] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("random entries match the double-loop oracle") {
    Rng rng(14);
    const FunctionalDataset ds = random_dataset(rng, 2, 2, 4);
    const CoefficientTensor t = build_coefficients(ds, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const Eigen::VectorXd want = oracle::project_loop(ds.covariate(j).row(i), 2);
        CHECK((t.block(i, j) - want).cwiseAbs().maxCoeff() <= 1e-14);
      }
  }
  SUBCASE("truncation too large") {
    Rng rng(15);
    const FunctionalDataset ds = random_dataset(rng, 2, 1, 4);
    CHECK_THROWS_AS(build_coefficients(ds, 4), std::invalid_argument);
  }
}

TEST_CASE("build_coefficients is prefix-stable in M") {
  Rng rng(16);
  const FunctionalDataset ds = random_dataset(rng, 3, 2, 9);
  const CoefficientTensor wide = build_coefficients(ds, 6);
  const CoefficientTensor narrow = build_coefficients(ds, 2);
  for (int i = 0; i < ds.N(); ++i)
    for (int j = 0; j < ds.p(); ++j)
      CHECK(narrow.block(i, j) == wide.block(i, j).head(2));  // bit-exact prefix
}

TEST_CASE("dataset construction validates shapes and values") {
  CHECK_THROWS_AS(FunctionalDataset({}, Eigen::VectorXd::Ones(1)), DataError);
  CHECK_THROWS_AS(
      FunctionalDataset({Eigen::MatrixXd::Ones(2, 4), Eigen::MatrixXd::Ones(3, 4)},
                        Eigen::VectorXd::Ones(2)),
      DataError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 4);
  bad(1, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(FunctionalDataset({bad}, Eigen::VectorXd::Ones(2)), DataError);
}

TEST_CASE("save/load round trip, csv and f64le") {
  Rng rng(17);
  const FunctionalDataset ds = random_dataset(rng, 3, 2, 5);
  for (const Encoding enc : {Encoding::kCsv, Encoding::kF64le}) {
    const fs::path dir = fresh_dir(encoding_name(enc));
    save_dataset(ds, dir, enc);
    const FunctionalDataset back = load_dataset(dir);
    CHECK(same_dataset(ds, back));
    const FunctionalDataset back_by_manifest = load_dataset(dir / "manifest.json");
    CHECK(same_dataset(ds, back_by_manifest));
    fs::remove_all(dir);
  }
}

TEST_CASE("minimal 1x1x2 dataset round trip") {
  Eigen::MatrixXd c(1, 2);
  c << 0.25, -1.75;
  Eigen::VectorXd y(1);
  y << 3.5;
  const FunctionalDataset ds({c}, y);
  const fs::path dir = fresh_dir("mini");
  save_dataset(ds, dir, Encoding::kCsv);
  CHECK(same_dataset(ds, load_dataset(dir)));
  fs::remove_all(dir);
}

TEST_CASE("load_dataset rejects inconsistent or corrupt inputs") {
  Rng rng(18);
  const FunctionalDataset ds = random_dataset(rng, 3, 2, 4);

  SUBCASE("manifest N disagrees with responses rows") {
    const fs::path dir = fresh_dir("mismatch");
    save_dataset(ds, dir, Encoding::kCsv);
    std::ofstream os(dir / "responses.csv");
    os << "y\n1.0\n2.0\n";  // two rows, manifest says three
    os.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("dimension mismatch"), DataError);
    fs::remove_all(dir);
  }

  SUBCASE("NaN in a grid file names instance and covariate") {
    const fs::path dir = fresh_dir("nan");
    save_dataset(ds, dir, Encoding::kCsv);
    std::ofstream os(dir / "cov_1.csv");
    os << "x_1,x_2,x_3,x_4\n0,0,0,0\n0,0,nan,0\n0,0,0,0\n";
    os.close();
    try {
      load_dataset(dir);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("instance 1") != std::string::npos);
      CHECK(msg.find("covariate 1") != std::string::npos);
    }
    fs::remove_all(dir);
  }

  SUBCASE("missing covariate file") {
    const fs::path dir = fresh_dir("missing");
    save_dataset(ds, dir, Encoding::kCsv);
    fs::remove(dir / "cov_0.csv");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    fs::remove_all(dir);
  }

  SUBCASE("malformed header") {
    const fs::path dir = fresh_dir("header");
    save_dataset(ds, dir, Encoding::kCsv);
    {
      std::ifstream is(dir / "cov_0.csv");
      std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
      all.replace(all.find("x_1"), 3, "q_1");
      std::ofstream os(dir / "cov_0.csv");
      os << all;
    }
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("header"), DataError);
    fs::remove_all(dir);
  }

  SUBCASE("missing manifest") { CHECK_THROWS_AS(load_dataset(fresh_dir("nodir")), DataError); }
}

TEST_CASE("save_dataset: creates directories, fails cleanly on unwritable target") {
  Rng rng(19);
  const FunctionalDataset ds = random_dataset(rng, 2, 1, 3);
  const fs::path dir = fresh_dir("deep") / "a" / "b";
  save_dataset(ds, dir, Encoding::kCsv);
  CHECK(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);

  // A path through a regular file cannot be created.
  const fs::path blocker = fresh_dir("blocker");
  fs::create_directories(blocker);
  std::ofstream(blocker / "file").put('x');
  CHECK_THROWS_AS(save_dataset(ds, blocker / "file" / "sub", Encoding::kCsv), DataError);
  fs::remove_all(blocker);
}

TEST_CASE("text encoding round trip is value-exact") {
  // Values with awkward decimal expansions survive the 17-digit format.
  Eigen::MatrixXd c(2, 3);
  c << 1.0 / 3.0, 2.0 / 7.0, 1e-300, -0.1, 12345.678901234567, 3.0;
  Eigen::VectorXd y(2);
  y << -1.0 / 3.0, 1e300;
  const FunctionalDataset ds({c}, y);
  const fs::path dir = fresh_dir("exact");
  save_dataset(ds, dir, Encoding::kCsv);
  CHECK(same_dataset(ds, load_dataset(dir)));
  fs::remove_all(dir);
}
