#ifndef SVPF_ERROR_HPP
#define SVPF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace svpf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that should be positive definite failed to factorize.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace svpf

#endif  // SVPF_ERROR_HPP
