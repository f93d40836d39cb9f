#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace divsample {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An input violates a documented precondition or type invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A numerical routine failed (non-finite input, non-convergence, degenerate basis).
class NumericError : public Error {
public:
  using Error::Error;
};

/// Malformed feature file. Carries the 1-based line number of the offending row.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Requested subset size exceeds the effective rank of the likelihood kernel.
class InsufficientRankError : public Error {
public:
  using Error::Error;
};

/// Not enough instances with positive selection mass to draw k distinct points.
class InsufficientSupportError : public Error {
public:
  using Error::Error;
};

}  // namespace divsample
