#include "spectra/errors.hpp"

namespace spectra {

std::string_view error_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::TokenOutOfRange: return "TokenOutOfRange";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::RelativeRefused: return "RelativeRefused";
    case ErrorCode::NotTwoDimensional: return "NotTwoDimensional";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::LambdaZero: return "LambdaZero";
    case ErrorCode::CgDidNotConverge: return "CgDidNotConverge";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    }
    return "Unknown";
}

int exit_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::InvalidArgument:
        return 2;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ClassOutOfRange:
    case ErrorCode::TokenOutOfRange:
    case ErrorCode::MissingEmbedding:
    case ErrorCode::RelativeRefused:
    case ErrorCode::NotTwoDimensional:
        return 3;
    case ErrorCode::DidNotConverge:
    case ErrorCode::LambdaZero:
    case ErrorCode::CgDidNotConverge:
    case ErrorCode::SingularSystem:
    case ErrorCode::ValidationFailed:
        return 4;
    case ErrorCode::IoError:
        return 5;
    }
    return 1;
}

} // namespace spectra
