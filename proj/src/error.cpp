#include "ravenbench/error.hpp"

namespace ravenbench {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "InvalidArgument";
        case ErrorKind::config: return "ConfigError";
        case ErrorKind::io: return "IoError";
        case ErrorKind::generation: return "GenerationFailed";
        case ErrorKind::constant_image: return "ConstantImage";
        case ErrorKind::timeout: return "Timeout";
        case ErrorKind::missing_result: return "MissingResult";
        case ErrorKind::external_failure: return "ExternalFailure";
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::unmasked_pixels_modified: return "UnmaskedPixelsModified";
        case ErrorKind::degenerate: return "Degenerate";
        case ErrorKind::zero_mean_reference: return "ZeroMeanReference";
        case ErrorKind::insufficient_data: return "InsufficientData";
        case ErrorKind::unattainable: return "Unattainable";
        case ErrorKind::item_mismatch: return "ItemMismatch";
        case ErrorKind::zero_margin: return "ZeroMargin";
        case ErrorKind::no_model_errors: return "NoModelErrors";
        case ErrorKind::battery_mismatch: return "BatteryMismatch";
        case ErrorKind::stage: return "StageFailure";
    }
    return "Unknown";
}

}  // namespace ravenbench
