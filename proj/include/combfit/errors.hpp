#pragma once

#include <stdexcept>
#include <string>

namespace combfit {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value outside the mathematical domain of an operation (negative claim,
// quantile level outside (0,1), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Dimension or shape mismatch between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Cholesky factorization failed; `pivot` is the 0-based index of the
// offending pivot.
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, int pivot_index)
      : Error(what), pivot(pivot_index) {}
  int pivot;
};

// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A column does not contain enough positive observations to fit a severity.
class InsufficientPositives : public Error {
 public:
  using Error::Error;
};

// A log-likelihood contribution evaluated to -inf/NaN; `row` is the 0-based
// observation index.
class LikelihoodUnderflow : public Error {
 public:
  LikelihoodUnderflow(const std::string& what, long row_index)
      : Error(what), row(row_index) {}
  long row;
};

// Parameters outside the admissible set (e.g. negative induced intensity).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Conditional severity rejection sampler fell below the acceptance floor.
class SamplerStarved : public Error {
 public:
  using Error::Error;
};

// More than the tolerated fraction of bootstrap replicas failed to refit.
class BootstrapUnstable : public Error {
 public:
  using Error::Error;
};

}  // namespace combfit
