#pragma once

// Phantom geometries shared by the unit tests and the acceptance binary.

#include <cmath>
#include <random>

#include "qsm/dipole.hpp"
#include "qsm/morphology.hpp"
#include "qsm/phantom.hpp"

namespace qsm::fixtures {

inline const Dims kGrid64{64, 64, 64};
inline const Spacing kIso1{1.0, 1.0, 1.0};
inline const Vec3 kAxial{0.0, 0.0, 1.0};

// Background sources sit outside a 28 mm brain: a 9 ppm air-like ball close to
// the inferior frontal edge.
inline PhantomSpec bfr_spec(bool internal, bool background) {
    PhantomSpec spec;
    spec.dims = kGrid64;
    spec.spacing = kIso1;
    spec.brain_mask_radius_mm = 28.0;
    if (internal) spec.spheres.push_back({{0.0, 0.0, 0.0}, 4.0, 1.0});
    if (background) spec.background_sources.push_back({{0.0, 22.0, -22.0}, 3.0, 9.0});
    return spec;
}

inline PhantomSpec centred_sphere_spec(double radius_mm, double delta_chi) {
    PhantomSpec spec;
    spec.dims = kGrid64;
    spec.spacing = kIso1;
    spec.brain_mask_radius_mm = 30.0;
    spec.spheres.push_back({{0.0, 0.0, 0.0}, radius_mm, delta_chi});
    return spec;
}

// Several weak sources, some of them inside the 4 mm edge shell of the brain.
inline PhantomSpec wtfi_spec() {
    PhantomSpec spec;
    spec.dims = kGrid64;
    spec.spacing = kIso1;
    spec.brain_mask_radius_mm = 28.0;
    spec.spheres = {{{0.0, 0.0, 0.0}, 4.0, 0.1},
                    {{10.0, 5.0, -3.0}, 3.0, -0.05},
                    {{0.0, -25.0, 0.0}, 3.0, 0.1},
                    {{18.0, 18.0, 0.0}, 2.5, 0.08},
                    {{-12.0, 8.0, 20.0}, 3.0, 0.06}};
    return spec;
}

inline ScalarVolume random_volume(const Dims& dims, const Spacing& spacing, std::uint64_t seed,
                                  double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    ScalarVolume v(dims, spacing);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(rng);
    return v;
}

} // namespace qsm::fixtures
