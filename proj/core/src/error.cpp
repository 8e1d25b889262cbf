#include "lcval/error.hpp"

namespace lcval {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kOutOfExtent: return "out_of_extent";
    case ErrorCode::kGeometryMismatch: return "geometry_mismatch";
    case ErrorCode::kOverlappingCodes: return "overlapping_codes";
    case ErrorCode::kUnsupportedFamily: return "unsupported_family";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kNotReviewable: return "not_reviewable";
    case ErrorCode::kAlreadyFinalized: return "already_finalized";
    case ErrorCode::kUnfinalized: return "unfinalized";
    case ErrorCode::kUnderpopulated: return "underpopulated";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace lcval
