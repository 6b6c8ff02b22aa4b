#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace terrabench {

enum class ErrorKind {
    Decode,
    InvalidImage,
    CropTooLarge,
    TooSmall,
    OutOfRegion,
    EmptyDataset,
    Shape,
    ModelMalformed,
    ModelVersion,
    Ordering,
    Config,
    PlatformUnsupported,
    PartialReport,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above, so
/// callers can branch on the category without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace terrabench
