#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obetc {

enum class ErrorCode {
  kNotHurwitz,
  kSingular,
  kNotStabilizable,
  kNotObservable,
  kNoConvergence,
  kBadSpec,
  kDegenerateInput,
  kTooShort,
  kRankDeficient,
  kDiverged,
  kDimensionMismatch,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Configuration and parse problems, as opposed to numerical failures.
  bool is_config() const noexcept {
    return code_ == ErrorCode::kConfig || code_ == ErrorCode::kBadSpec ||
           code_ == ErrorCode::kDimensionMismatch;
  }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotHurwitz: return "NotHurwitz";
    case ErrorCode::kSingular: return "Singular";
    case ErrorCode::kNotStabilizable: return "NotStabilizable";
    case ErrorCode::kNotObservable: return "NotObservable";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace obetc
