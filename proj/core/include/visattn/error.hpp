#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace visattn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the caller's input was violated.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A model configuration or weight set is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A sequence exceeds the model's max_seq.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `offset()` is the byte offset (binary formats) or
/// record index (text/JSON formats) where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace visattn
