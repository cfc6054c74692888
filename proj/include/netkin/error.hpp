#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netkin {

enum class ErrorCode {
    NonStochastic,
    NegativeEntry,
    EmptyMatrix,
    OutOfRangeControl,
    Reducible,
    NoConvergence,
    DimensionMismatch,
    WrongVariant,
    InvalidExponent,
    NonpositivePenalization,
    ZeroChi,
    ZeroDenominator,
    HeterogeneousParams,
    NegativeStateBlowup,
    NonFiniteState,
    StepSizeTooLarge,
    TrajectoryTooShort,
    StepTooLarge,
    ParseError,
    ValidationError,
    UnknownPreset,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(what), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

  private:
    ErrorCode m_code;
};

[[noreturn]] void fail(ErrorCode code, const std::string &what);

} // namespace netkin
