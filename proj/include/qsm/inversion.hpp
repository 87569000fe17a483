#pragma once

#include <vector>

#include "qsm/dipole.hpp"
#include "qsm/volume.hpp"

namespace qsm {

/// Radians per ppm for a 3 T scanner at a 20 ms effective echo.
double default_phase_scale();

/// Thresholded k-space division. Where 0 < |D| < t the divisor is t*sign(D);
/// the D = 0 samples (including DC) are zeroed.
ScalarVolume tkd(const ScalarVolume& local_field, const DipoleKernel& kernel,
                 double threshold = 0.2);

/// Objective of the nonlinear single-orientation inversion:
///   sum m W^2 |exp(i s f) - exp(i s D chi)|^2 + lambda_tv * TV_eps(chi).
/// The squared modulus is evaluated as 2 (1 - cos(s (f - D chi))).
struct NtvProblem {
    ScalarVolume field;
    ScalarVolume weight; ///< empty for uniform
    Mask mask;
    DipoleKernel kernel;
    double lambda_tv = 1e-3;
    double phase_scale = default_phase_scale();
    double tv_epsilon = 1e-8;

    [[nodiscard]] double loss(const ScalarVolume& chi) const;
    /// Gradient with respect to chi, restricted to the mask.
    [[nodiscard]] ScalarVolume gradient(const ScalarVolume& chi) const;
};

struct NtvOptions {
    double lambda_tv = 0.1;
    int iterations = 200;
    double initial_step = 1.0;
    double phase_scale = default_phase_scale();
};

struct InversionResult {
    ScalarVolume chi;
    std::vector<double> loss_trace;
};

/// Gradient descent from chi = 0 with backtracking line search. chi is kept on `mask`.
InversionResult nonlinear_tv_invert(const ScalarVolume& local_field, const ScalarVolume& weight,
                                    const Mask& mask, const DipoleKernel& kernel,
                                    const NtvOptions& options = {});

/// Multi-orientation least squares: sum_i D_i B_i / (sum_i D_i^2 + eps).
/// Directions must be unit vectors and not all collinear.
ScalarVolume cosmos(const std::vector<ScalarVolume>& fields, const std::vector<Vec3>& b0_dirs,
                    double epsilon = 1e-6);

} // namespace qsm
