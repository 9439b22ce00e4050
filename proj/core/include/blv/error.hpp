#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, bad parameter).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but carries no usable information, e.g. an all-zero
/// histogram or a batch where every instance is ignored.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A label value that is neither a valid class nor the ignore index.
class LabelRangeError : public ContractError {
 public:
  LabelRangeError(std::size_t position, long long value, std::size_t num_classes)
      : ContractError("label " + std::to_string(value) + " at index " +
                      std::to_string(position) + " is outside [0, " +
                      std::to_string(num_classes) + ") and is not the ignore index"),
        position_(position),
        value_(value) {}

  std::size_t position() const noexcept { return position_; }
  long long value() const noexcept { return value_; }

 private:
  std::size_t position_;
  long long value_;
};

/// Malformed binary input. `offset()` is the byte position where parsing failed.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace blv
