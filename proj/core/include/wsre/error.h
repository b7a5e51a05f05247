#ifndef WSRE_ERROR_H_
#define WSRE_ERROR_H_

#include <stdexcept>
#include <string>

namespace wsre {

// All library failures derive from Error. The CLI maps the three families
// below onto exit codes 1 (validation), 2 (transport) and 3 (numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, out-of-range values, inconsistent references.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Syntactically or structurally malformed input files.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A backend was asked for something it cannot do (e.g. logits from a
// text-only chat endpoint).
class CapabilityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Network / backend failure after all retries, or a replay cache miss.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Singular moment matrices, optimizer non-convergence, non-finite losses.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace wsre

#endif  // WSRE_ERROR_H_
