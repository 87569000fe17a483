#pragma once

#include <vector>

#include "qsm/kernels.hpp"
#include "qsm/volume.hpp"

namespace qsm {

/// Voxel offsets whose centres lie within `radius_mm` of the origin (inclusive),
/// measured in physical units so anisotropic grids get a true sphere.
std::vector<kernels::Offset> ball_offsets(double radius_mm, const Spacing& spacing);

/// A voxel survives iff every voxel centre within `radius_mm` of it is inside
/// `mask`. Voxels beyond the grid edge count as outside.
Mask erode_mask(const Mask& mask, double radius_mm, const Spacing& spacing);

/// Voxels of `mask` with at least one 6-neighbour outside it (or off-grid).
Mask boundary_shell(const Mask& mask);

/// Binary sphere of voxel centres within `radius_mm` of `center_mm`.
Mask sphere_mask(const Dims& dims, const Spacing& spacing, const Vec3& center_mm,
                 double radius_mm);

} // namespace qsm
