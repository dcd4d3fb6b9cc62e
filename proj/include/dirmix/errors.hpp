#pragma once

#include <stdexcept>
#include <string>

namespace dirmix {

/// Argument outside the domain of a mathematical function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mismatched matrix/vector shapes between arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration, task or data invariant does not hold.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weighted Dirichlet fit requested on a class with no mass.
class EmptyClusterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An inner iterative routine failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File contents violate the feature container layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dirmix
