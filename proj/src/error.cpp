#include "terrabench/error.hpp"

namespace terrabench {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Decode: return "decode";
        case ErrorKind::InvalidImage: return "invalid-image";
        case ErrorKind::CropTooLarge: return "crop-too-large";
        case ErrorKind::TooSmall: return "too-small";
        case ErrorKind::OutOfRegion: return "out-of-region";
        case ErrorKind::EmptyDataset: return "empty-dataset";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::ModelMalformed: return "malformed-model";
        case ErrorKind::ModelVersion: return "model-version";
        case ErrorKind::Ordering: return "ordering";
        case ErrorKind::Config: return "config";
        case ErrorKind::PlatformUnsupported: return "platform-unsupported";
        case ErrorKind::PartialReport: return "partial-report";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace terrabench
