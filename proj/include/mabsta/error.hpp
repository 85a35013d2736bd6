#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mabsta {

enum class ErrorCode {
  kBadIndex,
  kCyclicGraph,
  kDisconnectedFromRoot,
  kNotATree,
  kNotSerialTrees,
  kUnsupportedStructure,
  kFixConflict,
  kTooLarge,
  kDimensionMismatch,
  kDegenerateRange,
  kTraceExhausted,
  kOutOfOrderFrame,
  kRewardOutOfRange,
  kBadGamma,
  kConfigError,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure the library reports is one of these; the CLI maps the code
// to a diagnostic and a nonzero exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadIndex: return "BadIndex";
    case ErrorCode::kCyclicGraph: return "CyclicGraph";
    case ErrorCode::kDisconnectedFromRoot: return "DisconnectedFromRoot";
    case ErrorCode::kNotATree: return "NotATree";
    case ErrorCode::kNotSerialTrees: return "NotSerialTrees";
    case ErrorCode::kUnsupportedStructure: return "UnsupportedStructure";
    case ErrorCode::kFixConflict: return "FixConflict";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateRange: return "DegenerateRange";
    case ErrorCode::kTraceExhausted: return "TraceExhausted";
    case ErrorCode::kOutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::kRewardOutOfRange: return "RewardOutOfRange";
    case ErrorCode::kBadGamma: return "BadGamma";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace mabsta
