#pragma once

#include <stdexcept>
#include <string>

namespace mpcport {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Precondition or invariant violation on an input.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Malformed input file. Carries 1-based row/column of the offending cell
/// when known (0 = not applicable).
class ParseError : public Error {
public:
  ParseError(const std::string& msg, int row = 0, int column = 0)
      : Error(msg), row_(row), column_(column) {}
  int row() const { return row_; }
  int column() const { return column_; }

private:
  int row_;
  int column_;
};

/// A regime received too few labeled observations to estimate moments.
class DegenerateRegimeError : public Error {
public:
  using Error::Error;
};

/// Portfolio variance is numerically zero; risk contributions undefined.
class DegenerateRiskError : public Error {
public:
  using Error::Error;
};

/// An iterative solver hit its iteration limit before reaching tolerance.
/// Derived types carry the best iterate found.
class NonConvergenceError : public Error {
public:
  using Error::Error;
};

/// Portfolio gross return fell to -100% or below.
class WealthWipeoutError : public Error {
public:
  using Error::Error;
};

}  // namespace mpcport
