#pragma once

#include <stdexcept>
#include <string>

namespace rnmf {

// Shapes do not conform for the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input outside the domain of an operation (negative data, bad config value).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A documented precondition was violated by the caller.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Division by a zero coordinate in the diagonal majorizer.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed CSV, PGM or key=value input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A fit produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rnmf
