#ifndef NOMA_PA_ERROR_HPP
#define NOMA_PA_ERROR_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace noma_pa {

enum class ErrorCode {
  EmptySystem,
  NonPositiveRate,
  NonPositiveFraction,
  FractionSumMismatch,
  NonPositiveSnr,
  DimensionMismatch,
  IndexOutOfRange,
  NotCanonical,
  NegativeEpsilon,
  InvalidCoefficient,
  PowerBudgetExceeded,
  InvalidPermutation,
  TooManyPermutations,
  InvalidChannel,
  InvalidArgument,
  ScenarioParse,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySystem: return "EmptySystem";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::NonPositiveFraction: return "NonPositiveFraction";
    case ErrorCode::FractionSumMismatch: return "FractionSumMismatch";
    case ErrorCode::NonPositiveSnr: return "NonPositiveSnr";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotCanonical: return "NotCanonical";
    case ErrorCode::NegativeEpsilon: return "NegativeEpsilon";
    case ErrorCode::InvalidCoefficient: return "InvalidCoefficient";
    case ErrorCode::PowerBudgetExceeded: return "PowerBudgetExceeded";
    case ErrorCode::InvalidPermutation: return "InvalidPermutation";
    case ErrorCode::TooManyPermutations: return "TooManyPermutations";
    case ErrorCode::InvalidChannel: return "InvalidChannel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ScenarioParse: return "ScenarioParse";
  }
  return "Unknown";
}

/// Every failure raised by the library. `value()` carries the offending
/// quantity when there is one (the actual fraction sum, K!, the bad index...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<double> value = std::nullopt)
      : std::runtime_error(what), code_(code), value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::optional<double> value_;
};

}  // namespace noma_pa

#endif  // NOMA_PA_ERROR_HPP
