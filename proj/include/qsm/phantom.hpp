#pragma once

#include <cstdint>
#include <vector>

#include "qsm/volume.hpp"

namespace qsm {

/// Larmor frequency per tesla, Hz/T (proton).
inline constexpr double kGyromagneticHzPerTesla = 42.577478e6;

struct AcquisitionMeta {
    double b0_tesla = 3.0;
    Vec3 b0_dir{0.0, 0.0, 1.0};
    std::vector<double> echo_times_s;
    Spacing spacing{};

    /// Phase accrued per ppm of field at echo time `te_s`: gamma * B0 * TE * 1e-6.
    [[nodiscard]] double radians_per_ppm(double te_s) const;
};

struct SphereSource {
    Vec3 center_mm{};
    double radius_mm = 1.0;
    double delta_chi = 0.0; ///< ppm
};

/// Finite right cylinder (a vessel surrogate).
struct CylinderSource {
    Vec3 axis_point_mm{};
    Vec3 axis_dir{0.0, 0.0, 1.0};
    double radius_mm = 1.0;
    double half_length_mm = 1.0;
    double delta_chi = 0.0;
};

struct PhantomSpec {
    Dims dims{};
    Spacing spacing{};
    std::vector<SphereSource> spheres;
    std::vector<CylinderSource> cylinders;
    /// External sources (air/bone surrogates); must lie entirely outside the brain sphere.
    std::vector<SphereSource> background_sources;
    double brain_mask_radius_mm = 1.0;
    /// Seeds the optional white susceptibility texture inside the brain.
    std::uint64_t rng_seed = 0;
    double texture_sd = 0.0;
};

struct Phantom {
    ScalarVolume chi;            ///< ppm, zero outside brain_mask
    ScalarVolume chi_background; ///< ppm, zero inside brain_mask
    Mask brain_mask;             ///< centred sphere of brain_mask_radius_mm
};

/// Rasterises sources with 3x3x3 sub-voxel occupancy. Throws ValidationError
/// when a source leaves its permitted region.
Phantom build_phantom(const PhantomSpec& spec);

/// Fractional occupancy of a sphere sampled at 27 sub-voxel points per voxel.
ScalarVolume sphere_occupancy(const Dims& dims, const Spacing& spacing, const Vec3& center_mm,
                              double radius_mm);

/// Lorentz-corrected field (ppm) of a uniformly magnetised sphere: zero inside,
/// (dchi/3) (a/r)^3 (3 cos^2(theta) - 1) outside.
ScalarVolume analytic_sphere_field(const Vec3& center_mm, double radius_mm, double delta_chi,
                                   const Vec3& b0_dir, const Dims& dims, const Spacing& spacing);

struct EchoSeries {
    std::vector<ScalarVolume> magnitudes;
    std::vector<ScalarVolume> wrapped_phases; ///< radians in (-pi, pi]
    AcquisitionMeta meta;
};

/// Wrap to (-pi, pi].
double wrap_phase(double phi);

/// Multi-echo complex signal magnitude * exp(i phi_e), phi_e = gamma B0 TE_e f 1e-6,
/// plus complex Gaussian noise of standard deviation `noise_sd` per channel.
EchoSeries synthesize_echoes(const ScalarVolume& total_field, const AcquisitionMeta& meta,
                             const ScalarVolume& magnitude, double noise_sd,
                             std::uint64_t rng_seed);

} // namespace qsm
