#pragma once

#include <stdexcept>
#include <string>

namespace acd {

/// Failure categories. The CLI maps each onto a stable exit code.
enum class ErrorKind {
  InvalidArgument,   ///< bad parameters or mismatched shapes
  Io,                ///< file missing, unreadable or unwritable
  Numerical,         ///< factorization failure
  DegenerateData,    ///< single-class labels, zero dispersion, ...
  CorruptModel,      ///< checksum or manifest inconsistency
  UnsupportedVersion,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace acd
