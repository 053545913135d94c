#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace fusso::io {

// Doubles are printed with 17 significant digits so text files parse back to
// the identical bit pattern.
std::string format_double(double v);
double parse_double(const std::string& field, const std::string& context);

// CSV with one header row; values formatted via format_double.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& mat,
                      const std::vector<std::string>& column_names);
// Reads a CSV written by write_matrix_csv; the header must match exactly.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                const std::vector<std::string>& expected_header);

// Binary matrix: 16-byte header of two little-endian u64 (rows, cols)
// followed by rows*cols IEEE-754 doubles, little-endian, row-major.
void write_matrix_f64le(const std::filesystem::path& path, const Eigen::MatrixXd& mat);
Eigen::MatrixXd read_matrix_f64le(const std::filesystem::path& path);

// Stacked variant used when many matrices of identical shape share one file:
// header (count*rows, cols), blocks appended in index order.
class StackedF64Writer {
 public:
  StackedF64Writer(const std::filesystem::path& path, std::uint64_t total_rows, std::uint64_t cols);
  ~StackedF64Writer();
  void append(const Eigen::MatrixXd& block);
  void finish();  // verifies the advertised row count was written

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<std::string> grid_header(int n);  // "x_1", ..., "x_n"

}  // namespace fusso::io
