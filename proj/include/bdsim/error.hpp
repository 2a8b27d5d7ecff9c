#pragma once

#include <stdexcept>
#include <string>

namespace bdsim {

enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  Precondition,
  PremiseViolation,
  Parse,
  Io,
  Intractable,
};

// Every failure raised by the core carries one of these codes; the C API maps
// them one-to-one onto bds_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bdsim
