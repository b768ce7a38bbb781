#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace econet {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data problems: missing columns, malformed rows, unmapped labels.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf in training, failed gradient checks.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A documented calling contract was broken (e.g. a cache reused for backward).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed text file; carries the byte offset where parsing stopped.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace econet
