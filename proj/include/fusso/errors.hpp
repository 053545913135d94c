#pragma once

#include <stdexcept>
#include <string>

namespace fusso {

// Raised when input data violates a contract: missing files, dimension
// mismatches, non-finite values, malformed headers.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a computation cannot produce a trustworthy result:
// non-finite objective, degenerate normalization.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fusso
