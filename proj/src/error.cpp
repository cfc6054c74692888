#include "netkin/error.hpp"

namespace netkin {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonStochastic: return "NonStochastic";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::OutOfRangeControl: return "OutOfRangeControl";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::WrongVariant: return "WrongVariant";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::NonpositivePenalization: return "NonpositivePenalization";
    case ErrorCode::ZeroChi: return "ZeroChi";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::HeterogeneousParams: return "HeterogeneousParams";
    case ErrorCode::NegativeStateBlowup: return "NegativeStateBlowup";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::StepSizeTooLarge: return "StepSizeTooLarge";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

void fail(ErrorCode code, const std::string &what) { throw Error(code, what); }

} // namespace netkin
