#ifndef LCJM_ERROR_HPP
#define LCJM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lcjm {

/// Invalid input data or configuration (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite density, failed factorization, sampler breakdown (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lcjm

#endif  // LCJM_ERROR_HPP
