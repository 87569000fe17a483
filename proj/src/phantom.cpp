#include "qsm/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/morphology.hpp"

namespace qsm {

double AcquisitionMeta::radians_per_ppm(double te_s) const {
    return 2.0 * std::numbers::pi * kGyromagneticHzPerTesla * b0_tesla * te_s * 1e-6;
}

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

constexpr double kSub[3] = {-1.0 / 3.0, 0.0, 1.0 / 3.0};

// Index range along one axis whose voxels can touch [lo, hi] mm.
std::pair<std::size_t, std::size_t> axis_range(std::size_t n, double d, double lo, double hi) {
    const double half = static_cast<double>(n / 2);
    const double first = std::floor(lo / d + half - 1.0);
    const double last = std::ceil(hi / d + half + 1.0);
    const auto clamp = [&](double v) {
        return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
    };
    return {clamp(first), clamp(last)};
}

template <typename Inside>
void accumulate_occupancy(ScalarVolume& out, const Vec3& lo, const Vec3& hi, double weight,
                          Inside inside) {
    const Dims& dims = out.dims();
    const Spacing& sp = out.spacing();
    const auto [x0, x1] = axis_range(dims.nx, sp.dx, lo[0], hi[0]);
    const auto [y0, y1] = axis_range(dims.ny, sp.dy, lo[1], hi[1]);
    const auto [z0, z1] = axis_range(dims.nz, sp.dz, lo[2], hi[2]);
    for (std::size_t z = z0; z <= z1; ++z)
        for (std::size_t y = y0; y <= y1; ++y)
            for (std::size_t x = x0; x <= x1; ++x) {
                const Vec3 p = voxel_position(dims, sp, x, y, z);
                int hits = 0;
                for (double oz : kSub)
                    for (double oy : kSub)
                        for (double ox : kSub)
                            hits += inside(Vec3{p[0] + ox * sp.dx, p[1] + oy * sp.dy,
                                                p[2] + oz * sp.dz});
                if (hits) out[dims.index(x, y, z)] += weight * hits / 27.0;
            }
}

void add_sphere(ScalarVolume& out, const SphereSource& s) {
    const double r2 = s.radius_mm * s.radius_mm;
    const Vec3 lo{s.center_mm[0] - s.radius_mm, s.center_mm[1] - s.radius_mm,
                  s.center_mm[2] - s.radius_mm};
    const Vec3 hi{s.center_mm[0] + s.radius_mm, s.center_mm[1] + s.radius_mm,
                  s.center_mm[2] + s.radius_mm};
    accumulate_occupancy(out, lo, hi, s.delta_chi, [&](const Vec3& p) {
        const double dx = p[0] - s.center_mm[0], dy = p[1] - s.center_mm[1],
                     dz = p[2] - s.center_mm[2];
        return dx * dx + dy * dy + dz * dz <= r2;
    });
}

void add_cylinder(ScalarVolume& out, const CylinderSource& c) {
    const double n = norm3(c.axis_dir);
    const Vec3 u{c.axis_dir[0] / n, c.axis_dir[1] / n, c.axis_dir[2] / n};
    const double reach = c.half_length_mm + c.radius_mm;
    const Vec3 lo{c.axis_point_mm[0] - reach, c.axis_point_mm[1] - reach,
                  c.axis_point_mm[2] - reach};
    const Vec3 hi{c.axis_point_mm[0] + reach, c.axis_point_mm[1] + reach,
                  c.axis_point_mm[2] + reach};
    const double r2 = c.radius_mm * c.radius_mm;
    accumulate_occupancy(out, lo, hi, c.delta_chi, [&](const Vec3& p) {
        const Vec3 d{p[0] - c.axis_point_mm[0], p[1] - c.axis_point_mm[1],
                     p[2] - c.axis_point_mm[2]};
        const double t = d[0] * u[0] + d[1] * u[1] + d[2] * u[2];
        if (std::abs(t) > c.half_length_mm) return false;
        const double px = d[0] - t * u[0], py = d[1] - t * u[1], pz = d[2] - t * u[2];
        return px * px + py * py + pz * pz <= r2;
    });
}

bool inside_grid(const PhantomSpec& spec, const Vec3& center, double reach) {
    for (int a = 0; a < 3; ++a) {
        const double half = static_cast<double>(spec.dims[a] / 2) * spec.spacing[a];
        const double top = static_cast<double>(spec.dims[a] - 1 - spec.dims[a] / 2) *
                           spec.spacing[a];
        if (center[a] - reach < -half - 1e-9 || center[a] + reach > top + 1e-9) return false;
    }
    return true;
}

void validate(const PhantomSpec& spec) {
    require(spec.dims.size() > 0, "phantom: empty grid");
    require(spec.spacing.dx > 0 && spec.spacing.dy > 0 && spec.spacing.dz > 0,
            "phantom: voxel size must be positive");
    require(spec.brain_mask_radius_mm > 0, "phantom: brain mask radius must be positive");
    require(spec.texture_sd >= 0, "phantom: texture_sd must be non-negative");
    const double brain = spec.brain_mask_radius_mm;
    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
        const auto& s = spec.spheres[i];
        require(s.radius_mm > 0, fmt::format("phantom: sphere {} has non-positive radius", i));
        require(norm3(s.center_mm) + s.radius_mm <= brain + 1e-9,
                fmt::format("phantom: sphere {} extends outside the brain mask", i));
    }
    for (std::size_t i = 0; i < spec.cylinders.size(); ++i) {
        const auto& c = spec.cylinders[i];
        require(c.radius_mm > 0 && c.half_length_mm > 0,
                fmt::format("phantom: cylinder {} has non-positive size", i));
        const Vec3 u = [&] {
            const double n = norm3(c.axis_dir);
            require(n > 0, fmt::format("phantom: cylinder {} has a zero axis", i));
            return Vec3{c.axis_dir[0] / n, c.axis_dir[1] / n, c.axis_dir[2] / n};
        }();
        for (double sign : {-1.0, 1.0}) {
            const Vec3 end{c.axis_point_mm[0] + sign * c.half_length_mm * u[0],
                           c.axis_point_mm[1] + sign * c.half_length_mm * u[1],
                           c.axis_point_mm[2] + sign * c.half_length_mm * u[2]};
            require(norm3(end) + c.radius_mm <= brain + 1e-9,
                    fmt::format("phantom: cylinder {} extends outside the brain mask", i));
        }
    }
    for (std::size_t i = 0; i < spec.background_sources.size(); ++i) {
        const auto& s = spec.background_sources[i];
        require(s.radius_mm > 0,
                fmt::format("phantom: background source {} has non-positive radius", i));
        require(norm3(s.center_mm) - s.radius_mm >= brain - 1e-9,
                fmt::format("phantom: background source {} overlaps the brain mask", i));
        require(inside_grid(spec, s.center_mm, s.radius_mm),
                fmt::format("phantom: background source {} leaves the grid", i));
    }
}

} // namespace

ScalarVolume sphere_occupancy(const Dims& dims, const Spacing& spacing, const Vec3& center_mm,
                              double radius_mm) {
    require(radius_mm > 0, "sphere radius must be positive");
    ScalarVolume out(dims, spacing, Unit::dimensionless);
    add_sphere(out, SphereSource{center_mm, radius_mm, 1.0});
    return out;
}

Phantom build_phantom(const PhantomSpec& spec) {
    validate(spec);
    Mask brain = sphere_mask(spec.dims, spec.spacing, {0.0, 0.0, 0.0}, spec.brain_mask_radius_mm);

    ScalarVolume chi(spec.dims, spec.spacing, Unit::ppm);
    for (const auto& s : spec.spheres) add_sphere(chi, s);
    for (const auto& c : spec.cylinders) add_cylinder(chi, c);
    if (spec.texture_sd > 0) {
        std::mt19937_64 rng(spec.rng_seed);
        std::normal_distribution<double> noise(0.0, spec.texture_sd);
        for (std::size_t i = 0; i < chi.size(); ++i)
            if (brain[i]) chi[i] += noise(rng);
    }

    ScalarVolume background(spec.dims, spec.spacing, Unit::ppm);
    for (const auto& s : spec.background_sources) add_sphere(background, s);

    return {apply_mask(chi, brain), apply_mask(background, ~brain), std::move(brain)};
}

ScalarVolume analytic_sphere_field(const Vec3& center_mm, double radius_mm, double delta_chi,
                                   const Vec3& b0_dir, const Dims& dims,
                                   const Spacing& spacing) {
    require(radius_mm > 0, "analytic_sphere_field: radius must be positive");
    const double bn = norm3(b0_dir);
    require(bn > 0, "analytic_sphere_field: zero B0 direction");
    ScalarVolume out(dims, spacing, Unit::ppm);
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const Vec3 p = voxel_position(dims, spacing, x, y, z);
                const Vec3 d{p[0] - center_mm[0], p[1] - center_mm[1], p[2] - center_mm[2]};
                const double r = norm3(d);
                if (r <= radius_mm) continue;
                const double cos_theta = (d[0] * b0_dir[0] + d[1] * b0_dir[1] + d[2] * b0_dir[2]) /
                                         (r * bn);
                const double ratio = radius_mm / r;
                out[dims.index(x, y, z)] = delta_chi / 3.0 * ratio * ratio * ratio *
                                           (3.0 * cos_theta * cos_theta - 1.0);
            }
    return out;
}

double wrap_phase(double phi) {
    double w = std::remainder(phi, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

EchoSeries synthesize_echoes(const ScalarVolume& total_field, const AcquisitionMeta& meta,
                             const ScalarVolume& magnitude, double noise_sd,
                             std::uint64_t rng_seed) {
    require(noise_sd >= 0, "synthesize_echoes: noise_sd must be non-negative");
    require(!meta.echo_times_s.empty(), "synthesize_echoes: no echo times");
    require_same_dims(total_field.dims(), magnitude.dims(), "synthesize_echoes");

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    EchoSeries series;
    series.meta = meta;
    series.meta.spacing = total_field.spacing();
    for (double te : meta.echo_times_s) {
        const double scale = meta.radians_per_ppm(te);
        ScalarVolume mag(total_field.dims(), total_field.spacing(), magnitude.unit());
        ScalarVolume phase(total_field.dims(), total_field.spacing(), Unit::radians);
        for (std::size_t i = 0; i < total_field.size(); ++i) {
            std::complex<double> s = std::polar(magnitude[i], scale * total_field[i]);
            if (noise_sd > 0) {
                const double re = gauss(rng), im = gauss(rng);
                s += noise_sd * std::complex<double>(re, im);
            }
            mag[i] = std::abs(s);
            // Noiseless signals keep the exact wrapped phase even where the magnitude is 0.
            phase[i] = noise_sd > 0 ? wrap_phase(std::arg(s))
                                    : wrap_phase(scale * total_field[i]);
        }
        series.magnitudes.push_back(std::move(mag));
        series.wrapped_phases.push_back(std::move(phase));
    }
    return series;
}

} // namespace qsm
