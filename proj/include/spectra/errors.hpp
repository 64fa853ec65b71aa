#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spectra {

enum class ErrorCode {
    BadMagic,
    TruncatedFile,
    NonFiniteValue,
    InvalidArgument,
    IoError,
    DimensionMismatch,
    ClassOutOfRange,
    TokenOutOfRange,
    MissingEmbedding,
    RelativeRefused,
    NotTwoDimensional,
    DidNotConverge,
    LambdaZero,
    CgDidNotConverge,
    SingularSystem,
    ValidationFailed,
};

/// Stable identifier used in machine-readable error lines, e.g. "BadMagic".
std::string_view error_name(ErrorCode code);

/// Process exit status for a failure of this kind:
/// 2 bad input format, 3 dimension/class mismatch, 4 numerical failure, 5 I/O.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::uint64_t> offset = std::nullopt)
        : std::runtime_error(message), code_(code), offset_(offset) {}

    ErrorCode code() const noexcept { return code_; }

    /// Offending element index or byte offset, when the failure has one.
    std::optional<std::uint64_t> offset() const noexcept { return offset_; }

private:
    ErrorCode code_;
    std::optional<std::uint64_t> offset_;
};

} // namespace spectra
