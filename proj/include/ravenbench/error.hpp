#pragma once

#include <stdexcept>
#include <string>

namespace ravenbench {

// Every failure raised by the core carries one of these kinds. The C API maps
// them onto rb_status codes; the CLI maps those onto process exit codes.
enum class ErrorKind {
    invalid_argument,
    config,
    io,
    generation,           // battery could not be built within the resampling budget
    constant_image,       // lattice detection found no periodic structure
    timeout,              // external in-painter did not finish
    missing_result,       // external in-painter skipped an item
    external_failure,     // external in-painter exited non-zero or could not start
    dimension_mismatch,
    unmasked_pixels_modified,
    degenerate,           // RANSAC found no model with enough inliers
    zero_mean_reference,  // ERGAS reference image is black
    insufficient_data,
    unattainable,
    item_mismatch,
    zero_margin,
    no_model_errors,
    battery_mismatch,
    stage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace ravenbench
