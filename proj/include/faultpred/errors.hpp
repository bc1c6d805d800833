#pragma once

#include <stdexcept>
#include <string>

namespace faultpred {

/// Base class for every error raised by the library. The CLI maps each
/// subclass to a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or window dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a precondition (empty split, single class, gaps...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (CSV header, truncated container...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Container written by an incompatible format version.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// NaN/Inf produced where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. a forward trace replayed against different parameters.
class ContractError : public Error {
 public:
  using Error::Error;
};

enum class ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Exit code for an exception escaping a CLI subcommand.
ExitCode exit_code_for(const std::exception& e) noexcept;

}  // namespace faultpred
