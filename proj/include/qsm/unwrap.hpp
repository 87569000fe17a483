#pragma once

#include <vector>

#include "qsm/phantom.hpp"
#include "qsm/volume.hpp"

namespace qsm {

/// Laplacian phase unwrapping. The Poisson problem is solved with cosine
/// transforms (mirror boundary), so linear ramps crossing the grid edge come
/// back intact. The free constant is chosen so the result is congruent to
/// the input modulo 2*pi on most of `mask`.
ScalarVolume laplacian_unwrap(const ScalarVolume& wrapped, const Mask& mask);
/// Uses the whole grid as the reference region.
ScalarVolume laplacian_unwrap(const ScalarVolume& wrapped);

struct FieldFit {
    ScalarVolume field; ///< ppm
    Mask valid;         ///< false where the weights left the fit undetermined
};

struct FitOptions {
    /// Fit phase = offset + slope * TE instead of a line through the origin.
    bool with_offset = false;
};

/// Per-voxel weighted least-squares field estimate from unwrapped echo phases.
/// `weights` may be empty (uniform) or hold one nonnegative volume per echo.
FieldFit fit_field(const std::vector<ScalarVolume>& unwrapped, const AcquisitionMeta& meta,
                   const std::vector<ScalarVolume>& weights, FitOptions options = {});

/// magnitude^2 per echo, the default fit weighting.
std::vector<ScalarVolume> magnitude_weights(const std::vector<ScalarVolume>& magnitudes);

} // namespace qsm
