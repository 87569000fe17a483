#pragma once

#include <span>
#include <vector>

#include "qsm/volume.hpp"

namespace qsm {

/// Unit-dipole response in k-space, D(k) = 1/3 - (k.b)^2/|k|^2, sampled on the
/// FFT grid, with D(0) = 0. Real and even, values in [-2/3, 1/3].
class DipoleKernel {
public:
    DipoleKernel(Dims dims, Spacing spacing, Vec3 b0_dir, std::vector<double> values);

    [[nodiscard]] const Dims& dims() const { return dims_; }
    [[nodiscard]] const Spacing& spacing() const { return spacing_; }
    [[nodiscard]] const Vec3& b0_dir() const { return b0_dir_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    Dims dims_;
    Spacing spacing_;
    Vec3 b0_dir_;
    std::vector<double> values_;
};

/// Throws if b0_dir is not unit length within 1e-9.
DipoleKernel dipole_kernel(const Dims& dims, const Spacing& spacing, const Vec3& b0_dir);

/// Field (ppm) induced by a susceptibility map (ppm): ifft(X(k) D(k)).
ScalarVolume forward_field(const ScalarVolume& chi, const DipoleKernel& kernel);

/// Same model evaluated on a grid zero-padded to twice the size per axis and
/// cropped back, which suppresses circular wrap for sources near the edge.
ScalarVolume forward_field_padded(const ScalarVolume& chi, const Vec3& b0_dir);

Vec3 normalized(const Vec3& v);
/// `dir` rotated by `degrees` about the x (axis 0) or y (axis 1) axis.
Vec3 tilt(const Vec3& dir, int axis, double degrees);

} // namespace qsm
