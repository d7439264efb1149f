#include "nlpde/errors.hpp"

namespace nlpde {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::InvalidRegularityIndex: return "InvalidRegularityIndex";
        case ErrorCode::UnsupportedRegularityIndex: return "UnsupportedRegularityIndex";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownFunction: return "UnknownFunction";
        case ErrorCode::UnboundIdentifier: return "UnboundIdentifier";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::EvaluatorFailure: return "EvaluatorFailure";
        case ErrorCode::MissingDerivativeCallback: return "MissingDerivativeCallback";
        case ErrorCode::UnknownPreset: return "UnknownPreset";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::NonFiniteDetected: return "NonFiniteDetected";
        case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
        case ErrorCode::BallExit: return "BallExit";
        case ErrorCode::UnsupportedMultiComponent: return "UnsupportedMultiComponent";
        case ErrorCode::InvalidGridSequence: return "InvalidGridSequence";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::SelfCheckFailed: return "SelfCheckFailed";
        case ErrorCode::DivisionByZero: return "DivisionByZero";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace nlpde
