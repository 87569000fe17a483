#pragma once

#include <array>
#include <vector>

#include "qsm/dipole.hpp"
#include "qsm/volume.hpp"

namespace qsm {

/// Fixed data of the five-term objective. Build with make_wtfi_inputs so the
/// invariants (m1 inside m2, W mean 1 over m2, supervision on m1) hold.
struct WtfiInputs {
    ScalarVolume total_field; ///< f_T, ppm
    Mask m1;                  ///< eroded brain
    Mask m2;                  ///< whole brain
    ScalarVolume supervision; ///< local field on m1 (e.g. from RESHARP), ppm
    ScalarVolume weight;      ///< W
    DipoleKernel kernel;
    double phase_scale = 0.0; ///< radians per ppm
};

/// `weight` may be empty (uniform). W is rescaled to mean 1 over m2.
WtfiInputs make_wtfi_inputs(ScalarVolume total_field, Mask m1, Mask m2, ScalarVolume supervision,
                            ScalarVolume weight, DipoleKernel kernel, double phase_scale);

struct WtfiState {
    ScalarVolume chi1, fl1, chi2, fl2;
};

struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;
    double lambda4 = 0.03;
};

struct LossBreakdown {
    // Norms as written in the objective (unsquared L2, L1 for TV).
    double l_chi1 = 0, l_fl1 = 0, l_consistency = 0, l_chi_consistency = 0, l_tv = 0;
    double l_total = 0;
    // What the solver minimises: squared L2 terms and the smoothed TV.
    double sq_chi1 = 0, sq_fl1 = 0, sq_consistency = 0, sq_chi_consistency = 0;
    double smoothed_tv = 0;
    double objective = 0;
};

inline constexpr double kTvEpsilon = 1e-8;

LossBreakdown evaluate_losses(const WtfiState& state, const WtfiInputs& inputs,
                              const LossWeights& weights);

/// The smoothed objective alone (cheaper than the full breakdown).
double wtfi_objective(const WtfiState& state, const WtfiInputs& inputs,
                      const LossWeights& weights);

/// Gradients of the smoothed objective, each zero outside its variable's mask.
WtfiState loss_gradients(const WtfiState& state, const WtfiInputs& inputs,
                         const LossWeights& weights);

enum class WtfiSeed {
    smv,   ///< m2 f_T minus its spherical-mean low-pass
    total, ///< m2 f_T unchanged
    pdf,   ///< PDF local field on m2
};

struct StepRule {
    double initial_step = 1.0;
    /// Direction multipliers for chi1, fL1, chi2, fL2.
    std::array<double, 4> scales{1.0, 1.0, 1.0, 0.02};
};

struct WtfiOptions {
    int iterations = 500;
    WtfiSeed seed = WtfiSeed::smv;
    double seed_radius_mm = 4.0;
    double tkd_threshold = 0.2;
    StepRule step;
};

WtfiState initial_state(const WtfiInputs& inputs, const WtfiOptions& options);

struct WtfiResult {
    WtfiState state;
    std::vector<double> loss_trace; ///< smoothed objective, entry 0 at the seed
    bool stalled = false;
};

WtfiResult wtfi_solve(const WtfiInputs& inputs, const LossWeights& weights,
                      const WtfiOptions& options = {});

WtfiSeed seed_from_string(std::string_view name);
std::string_view to_string(WtfiSeed seed);

} // namespace qsm
