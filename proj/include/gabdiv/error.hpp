#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gabdiv {

enum class ErrorKind {
    DimensionMismatch,
    UnsupportedSupport,
    NonFiniteResult,
    InvalidMeasure,
    BadParams,
    FactorizationViolated,
    NotConverged,
    Infeasible,
    StepFailed,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnsupportedSupport: return "UnsupportedSupport";
    case ErrorKind::NonFiniteResult: return "NonFiniteResult";
    case ErrorKind::InvalidMeasure: return "InvalidMeasure";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::FactorizationViolated: return "FactorizationViolated";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::StepFailed: return "StepFailed";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

} // namespace gabdiv
