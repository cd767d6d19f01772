#ifndef ATLA_COMMON_ERROR_H_
#define ATLA_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace atla {

// Raised when an input violates a documented invariant (bad probabilities,
// shape mismatch, malformed spec file, ...).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Raised when a numerical procedure diverges (NaN loss, non-finite gradient).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace atla

#endif  // ATLA_COMMON_ERROR_H_
