#include "fusso/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fusso/errors.hpp"

namespace fusso::io {

namespace {

std::uint64_t byteswap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFF);
  return r;
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return byteswap64(v);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  const std::uint64_t le = to_little(v);
  os.write(reinterpret_cast<const char*>(&le), 8);
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return to_little(v);
}

void write_row_major(std::ostream& os, const Eigen::MatrixXd& mat) {
  std::vector<std::uint64_t> row(static_cast<std::size_t>(mat.cols()));
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j)
      row[static_cast<std::size_t>(j)] = to_little(std::bit_cast<std::uint64_t>(mat(i, j)));
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * 8));
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, const std::string& context) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError(context + ": cannot parse numeric field '" + field + "'");
  return v;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& mat,
                      const std::vector<std::string>& column_names) {
  if (static_cast<Eigen::Index>(column_names.size()) != mat.cols())
    throw std::invalid_argument("write_matrix_csv: header width mismatch");
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    if (j) os << ',';
    os << column_names[j];
  }
  os << '\n';
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      if (j) os << ',';
      os << format_double(mat(i, j));
    }
    os << '\n';
  }
  if (!os) throw DataError("write failed: " + path.string());
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                const std::vector<std::string>& expected_header) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::string expected;
    for (std::size_t j = 0; j < expected_header.size(); ++j) {
      if (j) expected += ',';
      expected += expected_header[j];
    }
    if (line != expected)
      throw DataError("malformed header in " + path.string() + ": expected '" + expected +
                      "', got '" + line + "'");
  }
  const std::size_t cols = expected_header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t start = 0, field = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string token = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                              : comma - start);
      values.push_back(parse_double(token, path.string() + " row " + std::to_string(rows + 1)));
      ++field;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (field != cols)
      throw DataError(path.string() + " row " + std::to_string(rows + 1) + ": expected " +
                      std::to_string(cols) + " columns, got " + std::to_string(field));
    ++rows;
  }
  Eigen::MatrixXd mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return mat;
}

void write_matrix_f64le(const std::filesystem::path& path, const Eigen::MatrixXd& mat) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  write_u64(os, static_cast<std::uint64_t>(mat.rows()));
  write_u64(os, static_cast<std::uint64_t>(mat.cols()));
  write_row_major(os, mat);
  if (!os) throw DataError("write failed: " + path.string());
}

Eigen::MatrixXd read_matrix_f64le(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  const std::uint64_t rows = read_u64(is);
  const std::uint64_t cols = read_u64(is);
  if (!is) throw DataError("truncated header: " + path.string());
  if (rows > (1ULL << 40) || cols > (1ULL << 40))
    throw DataError("implausible dimensions in " + path.string());
  Eigen::MatrixXd mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<std::uint64_t> row(static_cast<std::size_t>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * 8));
    if (!is) throw DataError("truncated data in " + path.string());
    for (std::uint64_t j = 0; j < cols; ++j)
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::bit_cast<double>(to_little(row[static_cast<std::size_t>(j)]));
  }
  return mat;
}

struct StackedF64Writer::Impl {
  std::ofstream os;
  std::filesystem::path path;
  std::uint64_t expected_rows = 0;
  std::uint64_t written_rows = 0;
  std::uint64_t cols = 0;
  bool finished = false;
};

StackedF64Writer::StackedF64Writer(const std::filesystem::path& path, std::uint64_t total_rows,
                                   std::uint64_t cols)
    : impl_(std::make_unique<Impl>()) {
  impl_->os.open(path, std::ios::binary);
  if (!impl_->os) throw DataError("cannot open for writing: " + path.string());
  impl_->path = path;
  impl_->expected_rows = total_rows;
  impl_->cols = cols;
  write_u64(impl_->os, total_rows);
  write_u64(impl_->os, cols);
}

StackedF64Writer::~StackedF64Writer() = default;

void StackedF64Writer::append(const Eigen::MatrixXd& block) {
  if (static_cast<std::uint64_t>(block.cols()) != impl_->cols)
    throw std::invalid_argument("StackedF64Writer: block column mismatch");
  write_row_major(impl_->os, block);
  impl_->written_rows += static_cast<std::uint64_t>(block.rows());
}

void StackedF64Writer::finish() {
  if (impl_->finished) return;
  impl_->finished = true;
  if (impl_->written_rows != impl_->expected_rows)
    throw DataError("stacked file " + impl_->path.string() + ": wrote " +
                    std::to_string(impl_->written_rows) + " rows, header advertises " +
                    std::to_string(impl_->expected_rows));
  impl_->os.flush();
  if (!impl_->os) throw DataError("write failed: " + impl_->path.string());
}

std::vector<std::string> grid_header(int n) {
  std::vector<std::string> h;
  h.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) h.push_back("x_" + std::to_string(k));
  return h;
}

}  // namespace fusso::io
