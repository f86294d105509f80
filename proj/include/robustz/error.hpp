#pragma once

#include <stdexcept>
#include <string>

namespace robustz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset file problems: missing columns, unparsable values, empty groups.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid matching rules or index lookups against a match matrix.
class MatchingError : public Error {
 public:
  using Error::Error;
};

/// Violated operation precondition (n < 2, bad ranges, invalid assignments).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The exhaustive oracle would need more evaluations than its budget allows.
class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

/// No one-to-one assignment of the requested size exists.
class NoPairsError : public Error {
 public:
  using Error::Error;
};

}  // namespace robustz
