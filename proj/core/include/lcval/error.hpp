#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcval {

enum class ErrorCode {
  kParse,
  kInvalidArgument,
  kOutOfExtent,
  kGeometryMismatch,
  kOverlappingCodes,
  kUnsupportedFamily,
  kNotFound,
  kDuplicate,
  kNotReviewable,
  kAlreadyFinalized,
  kUnfinalized,
  kUnderpopulated,
  kUndefined,
  kIo,
};

// Stable machine-readable name, used by the HTTP API and CLI diagnostics.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lcval
