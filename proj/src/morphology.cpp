#include "qsm/morphology.hpp"

#include <cmath>

#include "qsm/error.hpp"

namespace qsm {

std::vector<kernels::Offset> ball_offsets(double radius_mm, const Spacing& spacing) {
    require(radius_mm >= 0 && std::isfinite(radius_mm), "radius must be non-negative");
    const int rx = static_cast<int>(std::floor(radius_mm / spacing.dx));
    const int ry = static_cast<int>(std::floor(radius_mm / spacing.dy));
    const int rz = static_cast<int>(std::floor(radius_mm / spacing.dz));
    // Inclusive boundary with a little slack so a radius of exactly one voxel
    // width picks up the face neighbours.
    const double limit = radius_mm * radius_mm * (1.0 + 1e-12) + 1e-12;
    std::vector<kernels::Offset> offsets;
    for (int z = -rz; z <= rz; ++z)
        for (int y = -ry; y <= ry; ++y)
            for (int x = -rx; x <= rx; ++x) {
                const double px = x * spacing.dx, py = y * spacing.dy, pz = z * spacing.dz;
                if (px * px + py * py + pz * pz <= limit) offsets.push_back({x, y, z});
            }
    return offsets;
}

Mask erode_mask(const Mask& mask, double radius_mm, const Spacing& spacing) {
    require(radius_mm >= 0, "erode_mask: negative radius");
    if (radius_mm == 0) return mask;
    const auto offsets = ball_offsets(radius_mm, spacing);
    Mask out(mask.dims());
    kernels::parallel::erode(mask.values(), mask.dims(), offsets, out.values());
    return out;
}

Mask boundary_shell(const Mask& mask) {
    static const kernels::Offset six[] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                          {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    Mask interior(mask.dims());
    kernels::parallel::erode(mask.values(), mask.dims(), six, interior.values());
    return mask - interior;
}

Mask sphere_mask(const Dims& dims, const Spacing& spacing, const Vec3& center_mm,
                 double radius_mm) {
    Mask out(dims);
    const double r2 = radius_mm * radius_mm;
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const Vec3 p = voxel_position(dims, spacing, x, y, z);
                const double dx = p[0] - center_mm[0], dy = p[1] - center_mm[1],
                             dz = p[2] - center_mm[2];
                out.set(dims.index(x, y, z), dx * dx + dy * dy + dz * dz <= r2);
            }
    return out;
}

} // namespace qsm
