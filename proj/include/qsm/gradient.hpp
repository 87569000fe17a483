#pragma once

#include "qsm/volume.hpp"

namespace qsm {

enum class Axis { x = 0, y = 1, z = 2 };

/// v[i+1] - v[i] in voxel units; zero on the far face (replicate boundary).
ScalarVolume gradient_forward(const ScalarVolume& v, Axis axis);

/// Exact adjoint of gradient_forward: <G u, v> == <u, G^T v>.
ScalarVolume gradient_adjoint(const ScalarVolume& v, Axis axis);

/// Anisotropic L1 total variation, sum over axes of |G v|.
double total_variation(const ScalarVolume& v);

/// Differentiable TV surrogate sum(sqrt(g^2 + eps) - sqrt(eps)); zero for a
/// constant volume. `eps` is in squared value units.
double smoothed_total_variation(const ScalarVolume& v, double eps);
ScalarVolume smoothed_total_variation_gradient(const ScalarVolume& v, double eps);

} // namespace qsm
