#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repnum {

/// Machine-readable failure categories. The CLI maps them onto exit codes.
enum class ErrorCode {
    InvalidArgument,
    OutOfRange,
    SingularMatrix,
    NumericalFailure,
    NonConvergence,
    SyntaxError,
    UnknownIdentifier,
    InvalidSplitting,
    DimensionMismatch,
    FamilyMismatch,
    BreakpointMismatch,
    ConfigNotFound,
    ConfigParse,
    Io,
    Usage,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
        case ErrorCode::SingularMatrix: return "SINGULAR_MATRIX";
        case ErrorCode::NumericalFailure: return "NUMERICAL_FAILURE";
        case ErrorCode::NonConvergence: return "NON_CONVERGENCE";
        case ErrorCode::SyntaxError: return "SYNTAX_ERROR";
        case ErrorCode::UnknownIdentifier: return "UNKNOWN_IDENTIFIER";
        case ErrorCode::InvalidSplitting: return "INVALID_SPLITTING";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::FamilyMismatch: return "FAMILY_MISMATCH";
        case ErrorCode::BreakpointMismatch: return "BREAKPOINT_MISMATCH";
        case ErrorCode::ConfigNotFound: return "CONFIG_NOT_FOUND";
        case ErrorCode::ConfigParse: return "CONFIG_PARSE";
        case ErrorCode::Io: return "IO_ERROR";
        case ErrorCode::Usage: return "USAGE";
    }
    return "UNKNOWN";
}

/// Single exception type for the library; `module()` names the component
/// that raised it (e.g. "chebyshev", "assembly").
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string module, const std::string& message)
        : std::runtime_error(message), code_(code), module_(std::move(module)) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& module() const noexcept { return module_; }

private:
    ErrorCode code_;
    std::string module_;
};

/// Syntax errors from the coefficient expression parser carry a byte offset.
class ParseError : public Error {
public:
    ParseError(ErrorCode code, std::size_t offset, const std::string& message)
        : Error(code, "expression",
                message + " at offset " + std::to_string(offset)),
          offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace repnum
