#pragma once

#include <stdexcept>
#include <string>

namespace psg {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mismatched scenario or vector length.
struct shape_error : error {
    using error::error;
};

/// Invalid argument value (out of domain, bad configuration).
struct parameter_error : error {
    using error::error;
};

/// Game has no local vertex (or no quantum point) with positive
/// post-selection probability.
struct degenerate_game_error : error {
    using error::error;
};

/// Problem size exceeds a configured cap.
struct capacity_error : error {
    using error::error;
};

/// A numerical routine failed to converge or met non-finite values.
struct numerical_error : error {
    using error::error;
};

/// An object failed its construction-time invariants.
struct validation_error : error {
    using error::error;
};

/// File or stream parsing failure; message carries position info.
struct io_error : error {
    using error::error;
};

} // namespace psg
