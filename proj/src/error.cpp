#include "wm/error.hpp"

namespace wm {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedFile: return "MalformedFile";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NotWatermarkable: return "NotWatermarkable";
        case ErrorCode::CodeLengthMismatch: return "CodeLengthMismatch";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::NoStrength: return "NoStrength";
        case ErrorCode::InsufficientNegatives: return "InsufficientNegatives";
        case ErrorCode::EmptyScores: return "EmptyScores";
        case ErrorCode::EmptyCalibration: return "EmptyCalibration";
        case ErrorCode::InsufficientCalibration: return "InsufficientCalibration";
        case ErrorCode::InvalidPValue: return "InvalidPValue";
        case ErrorCode::EmptyRegistry: return "EmptyRegistry";
        case ErrorCode::CapacityExhausted: return "CapacityExhausted";
        case ErrorCode::DistanceViolation: return "DistanceViolation";
        case ErrorCode::DatasetEmpty: return "DatasetEmpty";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace wm
