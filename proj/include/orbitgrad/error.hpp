#ifndef ORBITGRAD_ERROR_HPP
#define ORBITGRAD_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace orbitgrad {

enum class ErrorCode {
  InvalidAction,
  InvalidSampler,
  NotInSupport,
  InvalidConfig,
  InvalidTime,
  InvalidSpace,
  DegenerateWeights,
  NotAGroup,
  InvalidShape,
  NumericalDivergence,
  InvalidInput,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::InvalidSampler: return "InvalidSampler";
    case ErrorCode::NotInSupport: return "NotInSupport";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidTime: return "InvalidTime";
    case ErrorCode::InvalidSpace: return "InvalidSpace";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::NotAGroup: return "NotAGroup";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::NumericalDivergence: return "NumericalDivergence";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

}  // namespace orbitgrad

#endif  // ORBITGRAD_ERROR_HPP
