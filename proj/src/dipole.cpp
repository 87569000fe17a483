#include "qsm/dipole.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/fourier.hpp"

namespace qsm {

DipoleKernel::DipoleKernel(Dims dims, Spacing spacing, Vec3 b0_dir, std::vector<double> values)
    : dims_(dims), spacing_(spacing), b0_dir_(b0_dir), values_(std::move(values)) {
    require(values_.size() == dims_.size(), "dipole kernel size does not match dims");
}

DipoleKernel dipole_kernel(const Dims& dims, const Spacing& spacing, const Vec3& b0_dir) {
    const double norm = std::sqrt(b0_dir[0] * b0_dir[0] + b0_dir[1] * b0_dir[1] +
                                  b0_dir[2] * b0_dir[2]);
    require(std::abs(norm - 1.0) <= 1e-9,
            fmt::format("B0 direction must be a unit vector (|b| = {:.12f})", norm));
    require(dims.size() > 0, "dipole_kernel: empty dims");

    const auto grid = FrequencyGrid::fft(dims, spacing);
    std::vector<double> d(dims.size());
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const double kx = grid.kx[x], ky = grid.ky[y], kz = grid.kz[z];
                const double k2 = kx * kx + ky * ky + kz * kz;
                const double kb = kx * b0_dir[0] + ky * b0_dir[1] + kz * b0_dir[2];
                d[dims.index(x, y, z)] = k2 > 0 ? 1.0 / 3.0 - kb * kb / k2 : 0.0;
            }
    // On the Nyquist planes of an even axis, -k aliases to a sample with the
    // same signed frequency, so an oblique B0 leaves D(k) != D(-k) there.
    // Averaging the pair makes the filter exactly even.
    std::vector<double> even(d.size());
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const std::size_t mirror = dims.index((dims.nx - x) % dims.nx, (dims.ny - y) % dims.ny,
                                                      (dims.nz - z) % dims.nz);
                const std::size_t i = dims.index(x, y, z);
                even[i] = 0.5 * (d[i] + d[mirror]);
            }
    return DipoleKernel(dims, spacing, b0_dir, std::move(even));
}

ScalarVolume forward_field(const ScalarVolume& chi, const DipoleKernel& kernel) {
    require_same_dims(chi.dims(), kernel.dims(), "forward_field");
    return apply_real_filter(chi, kernel.values()).with_unit(Unit::ppm);
}

ScalarVolume forward_field_padded(const ScalarVolume& chi, const Vec3& b0_dir) {
    const Dims& d = chi.dims();
    const Dims padded{2 * d.nx, 2 * d.ny, 2 * d.nz};
    // Place the volume at offset n/2 so the original centre stays central.
    const std::size_t ox = d.nx / 2, oy = d.ny / 2, oz = d.nz / 2;
    ScalarVolume big(padded, chi.spacing(), Unit::ppm);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                big[padded.index(x + ox, y + oy, z + oz)] = chi.at(x, y, z);
    const auto field = forward_field(big, dipole_kernel(padded, chi.spacing(), b0_dir));
    ScalarVolume out(d, chi.spacing(), Unit::ppm);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                out[d.index(x, y, z)] = field[padded.index(x + ox, y + oy, z + oz)];
    return out;
}

Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    require(n > 0, "cannot normalise a zero vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 tilt(const Vec3& dir, int axis, double degrees) {
    const double t = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    if (axis == 0) return {dir[0], c * dir[1] - s * dir[2], s * dir[1] + c * dir[2]};
    require(axis == 1, "tilt: axis must be 0 (x) or 1 (y)");
    return {c * dir[0] + s * dir[2], dir[1], -s * dir[0] + c * dir[2]};
}

} // namespace qsm
