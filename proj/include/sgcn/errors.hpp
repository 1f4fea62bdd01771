#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgcn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid hyper-parameter, flag or file layout.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// A primitive produced (or was asked to consume) a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Table-level invariant failure, e.g. duplicate (frame, pedestrian) rows.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Input file holds no observations.
class EmptyTableError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

}  // namespace sgcn
