#include "qsm/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/kernels.hpp"

namespace qsm {

namespace kern = kernels::parallel;

std::string_view to_string(Unit unit) {
    switch (unit) {
    case Unit::ppm: return "ppm";
    case Unit::radians: return "radians";
    case Unit::dimensionless: return "dimensionless";
    case Unit::arbitrary: return "arbitrary";
    }
    return "arbitrary";
}

Unit unit_from_string(std::string_view name) {
    if (name == "ppm") return Unit::ppm;
    if (name == "radians") return Unit::radians;
    if (name == "dimensionless") return Unit::dimensionless;
    if (name == "arbitrary") return Unit::arbitrary;
    throw ValidationError(fmt::format("unknown unit '{}'", name));
}

Vec3 voxel_position(const Dims& dims, const Spacing& spacing, std::size_t x, std::size_t y,
                    std::size_t z) {
    return {(static_cast<double>(x) - static_cast<double>(dims.nx / 2)) * spacing.dx,
            (static_cast<double>(y) - static_cast<double>(dims.ny / 2)) * spacing.dy,
            (static_cast<double>(z) - static_cast<double>(dims.nz / 2)) * spacing.dz};
}

namespace {

void check_geometry(const Dims& dims, const Spacing& spacing) {
    require(dims.nx > 0 && dims.ny > 0 && dims.nz > 0,
            fmt::format("volume dimensions must be positive, got {}x{}x{}", dims.nx, dims.ny,
                        dims.nz));
    require(spacing.dx > 0 && spacing.dy > 0 && spacing.dz > 0 && std::isfinite(spacing.dx) &&
                std::isfinite(spacing.dy) && std::isfinite(spacing.dz),
            fmt::format("voxel size must be positive, got {}x{}x{}", spacing.dx, spacing.dy,
                        spacing.dz));
}

} // namespace

ScalarVolume::ScalarVolume(Dims dims, Spacing spacing, Unit unit)
    : dims_(dims), spacing_(spacing), unit_(unit), values_(dims.size(), 0.0) {
    check_geometry(dims, spacing);
}

ScalarVolume::ScalarVolume(Dims dims, Spacing spacing, std::vector<double> values, Unit unit)
    : dims_(dims), spacing_(spacing), unit_(unit), values_(std::move(values)) {
    check_geometry(dims, spacing);
    require(values_.size() == dims.size(),
            fmt::format("volume has {} values but dims {}x{}x{} need {}", values_.size(),
                        dims.nx, dims.ny, dims.nz, dims.size()));
    check_finite("volume construction");
}

ScalarVolume ScalarVolume::with_unit(Unit unit) const {
    ScalarVolume out = *this;
    out.unit_ = unit;
    return out;
}

bool ScalarVolume::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarVolume::check_finite(std::string_view what) const {
    if (!all_finite()) throw NumericalError(fmt::format("non-finite values in {}", what));
}

SpectralVolume::SpectralVolume(Dims dims, Spacing spacing,
                               std::vector<std::complex<double>> values)
    : dims_(dims), spacing_(spacing), values_(std::move(values)) {
    check_geometry(dims, spacing);
    require(values_.size() == dims.size(), "spectral volume size does not match its dims");
}

Mask::Mask(Dims dims, bool fill) : dims_(dims), values_(dims.size(), fill ? 1 : 0) {}

Mask::Mask(Dims dims, std::vector<std::uint8_t> values)
    : dims_(dims), values_(std::move(values)) {
    require(values_.size() == dims.size(), "mask size does not match its dims");
    for (auto& v : values_) v = v ? 1 : 0;
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 1));
}

bool Mask::is_subset_of(const Mask& other) const {
    if (dims_ != other.dims_) return false;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] && !other.values_[i]) return false;
    return true;
}

Mask operator&(const Mask& a, const Mask& b) {
    require_same_dims(a.dims(), b.dims(), "mask intersection");
    Mask out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out.values_[i] = a.values_[i] & b.values_[i];
    return out;
}

Mask operator-(const Mask& a, const Mask& b) {
    require_same_dims(a.dims(), b.dims(), "mask difference");
    Mask out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out.values_[i] = a.values_[i] && !b.values_[i];
    return out;
}

Mask operator~(const Mask& a) {
    Mask out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out.values_[i] = a.values_[i] ? 0 : 1;
    return out;
}

void require_same_dims(const Dims& a, const Dims& b, std::string_view what) {
    if (a != b)
        throw ValidationError(fmt::format("dimension mismatch in {}: {}x{}x{} vs {}x{}x{}", what,
                                          a.nx, a.ny, a.nz, b.nx, b.ny, b.nz));
}

ScalarVolume operator+(const ScalarVolume& a, const ScalarVolume& b) {
    require_same_dims(a.dims(), b.dims(), "volume addition");
    ScalarVolume out(a.dims(), a.spacing(), a.unit());
    kern::add_scaled(a.values(), 1.0, b.values(), out.values());
    return out;
}

ScalarVolume operator-(const ScalarVolume& a, const ScalarVolume& b) {
    require_same_dims(a.dims(), b.dims(), "volume subtraction");
    ScalarVolume out(a.dims(), a.spacing(), a.unit());
    kern::add_scaled(a.values(), -1.0, b.values(), out.values());
    return out;
}

ScalarVolume operator*(double s, const ScalarVolume& v) {
    ScalarVolume out(v.dims(), v.spacing(), v.unit());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
    return out;
}

ScalarVolume apply_mask(const ScalarVolume& v, const Mask& m) {
    require_same_dims(v.dims(), m.dims(), "apply_mask");
    ScalarVolume out = v;
    kern::mask_inplace(out.values(), m.values());
    return out;
}

double masked_mean(const ScalarVolume& v, const Mask& m) {
    require_same_dims(v.dims(), m.dims(), "masked_mean");
    const std::size_t n = m.count();
    require(n > 0, "masked_mean over an empty mask");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (m[i]) acc += v[i];
    return acc / static_cast<double>(n);
}

ScalarVolume remove_mean(const ScalarVolume& v, const Mask& m) {
    const double mean = masked_mean(v, m);
    ScalarVolume out(v.dims(), v.spacing(), v.unit());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = m[i] ? v[i] - mean : 0.0;
    return out;
}

ScalarVolume to_volume(const Mask& m, const Spacing& spacing) {
    ScalarVolume out(m.dims(), spacing, Unit::dimensionless);
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0 : 0.0;
    return out;
}

Mask threshold_mask(const ScalarVolume& v, double threshold) {
    Mask out(v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) out.set(i, std::abs(v[i]) > threshold);
    return out;
}

double masked_norm(const ScalarVolume& v, const Mask& m) {
    require_same_dims(v.dims(), m.dims(), "masked_norm");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (m[i]) acc += v[i] * v[i];
    return std::sqrt(acc);
}

double relative_error(const ScalarVolume& estimate, const ScalarVolume& reference,
                      const Mask& m) {
    require_same_dims(estimate.dims(), reference.dims(), "relative_error");
    const double ref = masked_norm(reference, m);
    require(ref > 0, "relative_error: reference is zero over the mask");
    return masked_norm(estimate - reference, m) / ref;
}

} // namespace qsm
