#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace handover {

enum class ErrorCode {
  kInvalidArgument,
  kSceneOverflow,
  kUnknownObject,
  kDegenerateDirection,
  kNoIntersection,
  kBehindViewer,
  kTargetOutsideMonitor,
  kEmptyInput,
  kNoObject,
  kNoCandidate,
  kPartNotFound,
  kNoGrasp,
  kPartCloudEmpty,
  kOutOfLimits,
  kUnreachable,
  kNotConverged,
  kVersionMismatch,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported with this type; the
// code is what callers (and the pipeline's stage bookkeeping) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace handover
