#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpslab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix is not invertible (or has non-finite entries).
struct SingularMatrix : Error {
    using Error::Error;
};

/// A singular-value computation failed to converge.
struct NumericalFailure : Error {
    using Error::Error;
};

/// Required singular-value gap is below the configured floor.
struct NoSingularGap : Error {
    using Error::Error;
};

/// Flag pairing below the transversality floor.
struct NonTransverse : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct DisjointnessViolation : Error {
    using Error::Error;
};

struct NoPeripheral : Error {
    using Error::Error;
};

struct UnknownZooName : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

enum class WarningCode {
    CapTooSmall,
    EmptyShadow,
    DegenerateFlag,
    ElementaryGroup,
    NoPeripheralFactor,
    MethodDisagreement,
};

inline const char* warning_code_name(WarningCode c) {
    switch (c) {
        case WarningCode::CapTooSmall: return "CapTooSmall";
        case WarningCode::EmptyShadow: return "EmptyShadow";
        case WarningCode::DegenerateFlag: return "DegenerateFlag";
        case WarningCode::ElementaryGroup: return "ElementaryGroup";
        case WarningCode::NoPeripheralFactor: return "NoPeripheralFactor";
        case WarningCode::MethodDisagreement: return "MethodDisagreement";
    }
    return "Unknown";
}

struct Warning {
    WarningCode code;
    std::string message;
};

}  // namespace gpslab
