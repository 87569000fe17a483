#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qsm {

struct Dims {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;

    [[nodiscard]] constexpr std::size_t size() const { return nx * ny * nz; }
    [[nodiscard]] constexpr std::size_t operator[](int axis) const {
        return axis == 0 ? nx : (axis == 1 ? ny : nz);
    }
    /// Linear offset of one step along `axis` (x fastest).
    [[nodiscard]] constexpr std::size_t stride(int axis) const {
        return axis == 0 ? 1 : (axis == 1 ? nx : nx * ny);
    }
    [[nodiscard]] constexpr std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + nx * (y + ny * z);
    }
    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

/// Voxel edge lengths in millimetres.
struct Spacing {
    double dx = 1.0;
    double dy = 1.0;
    double dz = 1.0;

    [[nodiscard]] constexpr double operator[](int axis) const {
        return axis == 0 ? dx : (axis == 1 ? dy : dz);
    }
    friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

using Vec3 = std::array<double, 3>;

enum class Unit { ppm, radians, dimensionless, arbitrary };

std::string_view to_string(Unit unit);
Unit unit_from_string(std::string_view name);

/// Physical position (mm) of a voxel centre. Index n/2 along each axis sits at the origin.
Vec3 voxel_position(const Dims& dims, const Spacing& spacing, std::size_t x, std::size_t y,
                    std::size_t z);

class Mask;

/// Real-valued 3D grid, x fastest. Values are checked finite on construction.
class ScalarVolume {
public:
    ScalarVolume() = default;
    ScalarVolume(Dims dims, Spacing spacing, Unit unit = Unit::arbitrary);
    ScalarVolume(Dims dims, Spacing spacing, std::vector<double> values,
                 Unit unit = Unit::arbitrary);

    [[nodiscard]] const Dims& dims() const { return dims_; }
    [[nodiscard]] const Spacing& spacing() const { return spacing_; }
    [[nodiscard]] Unit unit() const { return unit_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] bool empty() const { return values_.empty(); }

    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }
    [[nodiscard]] const std::vector<double>& vector() const { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    [[nodiscard]] double at(std::size_t x, std::size_t y, std::size_t z) const {
        return values_[dims_.index(x, y, z)];
    }

    [[nodiscard]] ScalarVolume with_unit(Unit unit) const;
    [[nodiscard]] bool all_finite() const;
    /// Throws NumericalError naming `what` if any value is NaN/Inf.
    void check_finite(std::string_view what) const;

private:
    Dims dims_{};
    Spacing spacing_{};
    Unit unit_ = Unit::arbitrary;
    std::vector<double> values_;
};

/// Complex k-space grid; DC at index (0,0,0), standard FFT ordering.
class SpectralVolume {
public:
    SpectralVolume() = default;
    SpectralVolume(Dims dims, Spacing spacing, std::vector<std::complex<double>> values);

    [[nodiscard]] const Dims& dims() const { return dims_; }
    [[nodiscard]] const Spacing& spacing() const { return spacing_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::span<const std::complex<double>> values() const { return values_; }
    [[nodiscard]] std::span<std::complex<double>> values() { return values_; }
    std::complex<double> operator[](std::size_t i) const { return values_[i]; }
    std::complex<double>& operator[](std::size_t i) { return values_[i]; }

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<std::complex<double>> values_;
};

class Mask {
public:
    Mask() = default;
    Mask(Dims dims, bool fill = false);
    Mask(Dims dims, std::vector<std::uint8_t> values);

    [[nodiscard]] const Dims& dims() const { return dims_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::span<const std::uint8_t> values() const { return values_; }
    [[nodiscard]] std::span<std::uint8_t> values() { return values_; }

    bool operator[](std::size_t i) const { return values_[i] != 0; }
    void set(std::size_t i, bool on) { values_[i] = on ? 1 : 0; }

    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool is_subset_of(const Mask& other) const;

    friend Mask operator&(const Mask& a, const Mask& b);
    /// Voxels in `a` but not in `b`.
    friend Mask operator-(const Mask& a, const Mask& b);
    friend Mask operator~(const Mask& a);
    friend bool operator==(const Mask&, const Mask&) = default;

private:
    Dims dims_{};
    std::vector<std::uint8_t> values_;
};

void require_same_dims(const Dims& a, const Dims& b, std::string_view what);

// Voxelwise helpers. Results keep the unit of the first operand.
ScalarVolume operator+(const ScalarVolume& a, const ScalarVolume& b);
ScalarVolume operator-(const ScalarVolume& a, const ScalarVolume& b);
ScalarVolume operator*(double s, const ScalarVolume& v);

/// Zero outside the mask.
ScalarVolume apply_mask(const ScalarVolume& v, const Mask& m);
double masked_mean(const ScalarVolume& v, const Mask& m);
/// Subtract the mean over `m` and zero everything outside it.
ScalarVolume remove_mean(const ScalarVolume& v, const Mask& m);
/// 0/1 volume for a mask.
ScalarVolume to_volume(const Mask& m, const Spacing& spacing);
/// Voxels where |v| > threshold.
Mask threshold_mask(const ScalarVolume& v, double threshold);

/// L2 norm over the mask.
double masked_norm(const ScalarVolume& v, const Mask& m);
/// ||m (a - b)|| / ||m b|| as a fraction (not percent).
double relative_error(const ScalarVolume& estimate, const ScalarVolume& reference, const Mask& m);

} // namespace qsm
