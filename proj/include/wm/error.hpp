#pragma once

#include <stdexcept>
#include <string>

namespace wm {

enum class ErrorCode {
    MalformedFile,
    UnsupportedFormat,
    DimensionMismatch,
    LengthMismatch,
    NotWatermarkable,
    CodeLengthMismatch,
    ImageTooSmall,
    NoStrength,
    InsufficientNegatives,
    EmptyScores,
    EmptyCalibration,
    InsufficientCalibration,
    InvalidPValue,
    EmptyRegistry,
    CapacityExhausted,
    DistanceViolation,
    DatasetEmpty,
    InvalidConfig,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying one of the toolkit's documented error codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace wm
