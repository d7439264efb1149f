#pragma once

#include <stdexcept>
#include <string>

namespace nlpde {

enum class ErrorCode {
    InvalidParameter,
    UnsupportedOrder,
    IndexOutOfRange,
    InvalidAlpha,
    InvalidRegularityIndex,
    UnsupportedRegularityIndex,
    SyntaxError,
    UnknownFunction,
    UnboundIdentifier,
    DomainError,
    EvaluatorFailure,
    MissingDerivativeCallback,
    UnknownPreset,
    CflViolation,
    NonFiniteDetected,
    MaxIterExceeded,
    BallExit,
    UnsupportedMultiComponent,
    InvalidGridSequence,
    GridMismatch,
    SelfCheckFailed,
    DivisionByZero,
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode c);

/// Library-wide exception. `where` is "<module>::<op>" for the CLI error line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string where, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + " in " + where + ": " + message),
          code_(code), where_(std::move(where)), message_(message) {}

    ErrorCode code() const { return code_; }
    const std::string& where() const { return where_; }
    const std::string& message() const { return message_; }

private:
    ErrorCode code_;
    std::string where_;
    std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string where, const std::string& message) {
    throw Error(code, std::move(where), message);
}

} // namespace nlpde
