#ifndef RECURNET_ERRORS_HPP
#define RECURNET_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace recurnet {

/// Incompatible tensor shapes or an illegal operation argument.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN/Inf values, divergence, or other numeric failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: corrupt files, inconsistent mazes, bad configs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A binary file failed to parse; carries the byte offset of the problem.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace recurnet

#endif  // RECURNET_ERRORS_HPP
