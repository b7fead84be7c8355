#pragma once

#include <stdexcept>
#include <string>

namespace hankelshift {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: unparsable files, invalid sequences, mixed representations.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An operation's precondition does not hold on the supplied data.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The data stops before an index an operation needs.
class HorizonError : public PreconditionError {
 public:
  HorizonError(std::size_t required_index, std::size_t horizon)
      : PreconditionError("insufficient moments: need index " + std::to_string(required_index) +
                          ", horizon is " + std::to_string(horizon)),
        required_index_(required_index),
        horizon_(horizon) {}

  std::size_t required_index() const noexcept { return required_index_; }
  std::size_t horizon() const noexcept { return horizon_; }

 private:
  std::size_t required_index_;
  std::size_t horizon_;
};

/// Two independent computations that must agree did not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace hankelshift
