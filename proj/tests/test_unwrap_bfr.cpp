#include <doctest.h>

#include <numbers>

#include "fixtures.hpp"
#include "qsm/bfr.hpp"
#include "qsm/error.hpp"
#include "qsm/unwrap.hpp"

using namespace qsm;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarVolume wrapped(const ScalarVolume& v) {
    ScalarVolume out = v;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = wrap_phase(v[i]);
    return out;
}

ScalarVolume smooth_bump(const Dims& d, double peak) {
    ScalarVolume v(d, fixtures::kIso1);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const Vec3 p = voxel_position(d, fixtures::kIso1, x, y, z);
                v[d.index(x, y, z)] = peak * std::exp(-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 60.0);
            }
    return v;
}

} // namespace

TEST_CASE("unwrap recovers a smooth phase that wraps several times") {
    const Dims d{32, 32, 32};
    const auto truth = smooth_bump(d, 9.0);
    const auto u = laplacian_unwrap(wrapped(truth));
    double worst = 0;
    for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(u[i] - truth[i]));
    CHECK(worst < 1e-3);
}

TEST_CASE("unwrap leaves a constant alone") {
    const Dims d{8, 8, 8};
    const ScalarVolume c(d, fixtures::kIso1, std::vector<double>(d.size(), 1.25));
    const auto u = laplacian_unwrap(c);
    for (double v : u.values()) CHECK(v == doctest::Approx(1.25));
}

TEST_CASE("field fit matches the weighted normal equations") {
    const Dims d{3, 2, 2};
    AcquisitionMeta meta;
    meta.echo_times_s = {0.005, 0.012, 0.02};
    std::vector<ScalarVolume> phase, w;
    for (unsigned e = 0; e < 3; ++e) {
        phase.push_back(fixtures::random_volume(d, fixtures::kIso1, 40 + e, -3, 3));
        w.push_back(fixtures::random_volume(d, fixtures::kIso1, 50 + e, 0.1, 2.0));
    }
    const auto plain = fit_field(phase, meta, w);
    const auto offset = fit_field(phase, meta, w, {.with_offset = true});
    for (std::size_t i = 0; i < d.size(); ++i) {
        double sw = 0, st = 0, stt = 0, sp = 0, stp = 0;
        for (std::size_t e = 0; e < 3; ++e) {
            const double t = meta.radians_per_ppm(meta.echo_times_s[e]);
            sw += w[e][i];
            st += w[e][i] * t;
            stt += w[e][i] * t * t;
            sp += w[e][i] * phase[e][i];
            stp += w[e][i] * t * phase[e][i];
        }
        CHECK(plain.field[i] == doctest::Approx(stp / stt).epsilon(1e-10));
        CHECK(offset.field[i] == doctest::Approx((sw * stp - st * sp) / (sw * stt - st * st)).epsilon(1e-9));
        CHECK(plain.valid[i]);
    }
}

TEST_CASE("field fit flags voxels with no weight") {
    const Dims d{2, 1, 1};
    AcquisitionMeta meta;
    meta.echo_times_s = {0.01, 0.02};
    std::vector<ScalarVolume> phase(2, ScalarVolume(d, fixtures::kIso1, {1.0, 1.0}));
    std::vector<ScalarVolume> w(2, ScalarVolume(d, fixtures::kIso1, {1.0, 0.0}));
    const auto fit = fit_field(phase, meta, w);
    CHECK(fit.valid[0]);
    CHECK_FALSE(fit.valid[1]);
    CHECK(fit.field[1] == 0.0);
    CHECK_THROWS_AS(fit_field({phase[0]}, meta, {}), ValidationError);
}

TEST_CASE("SMV of a delta is the normalised ball") {
    const Dims d{16, 16, 16};
    ScalarVolume delta(d, fixtures::kIso1);
    delta[d.index(8, 8, 8)] = 1.0;
    const auto s = smv_convolve(delta, 2.0);
    const auto ball = ball_offsets(2.0, fixtures::kIso1);
    const double w = 1.0 / double(ball.size());
    double total = 0;
    for (double v : s.values()) total += v;
    CHECK(total == doctest::Approx(1.0));
    for (const auto& o : ball) CHECK(s.at(8 + o[0], 8 + o[1], 8 + o[2]) == doctest::Approx(w));
    CHECK(std::abs(s.at(8, 8, 11)) < 1e-14);
}

TEST_CASE("subvoxel SMV keeps unit mass") {
    const auto spec = smv_spectrum({16, 16, 16}, fixtures::kIso1, 3.0, SmvShape::subvoxel);
    CHECK(spec[0] == doctest::Approx(1.0));
}

TEST_CASE("background removal is linear and confined to its mask") {
    auto spec = fixtures::bfr_spec(true, true);
    spec.dims = {40, 40, 40};
    spec.brain_mask_radius_mm = 14;
    spec.spheres = {{{2, 0, 0}, 3.0, 0.5}};
    spec.background_sources = {{{0, 14, -14}, 2.0, 9.0}};
    const auto ph = build_phantom(spec);
    const auto k = dipole_kernel(spec.dims, spec.spacing, fixtures::kAxial);
    const auto f1 = forward_field(ph.chi + ph.chi_background, k);
    const auto f2 = fixtures::random_volume(spec.dims, spec.spacing, 17, -0.05, 0.05);
    const auto combo = 2.0 * f1 - f2;

    auto check = [&](auto run, double tol) {
        const BfrResult a = run(f1), b = run(f2), c = run(combo);
        INFO(c.method, " converged=", c.converged, " residual=", c.residual_norm);
        const auto expect = 2.0 * a.local_field - b.local_field;
        CHECK(relative_error(c.local_field, expect, c.mask_out) < tol);
        CHECK(c.mask_out.is_subset_of(ph.brain_mask));
        for (std::size_t i = 0; i < c.local_field.size(); ++i)
            if (!c.mask_out[i]) CHECK(c.local_field[i] == 0.0);
    };
    check([&](const ScalarVolume& f) { return sharp(f, ph.brain_mask); }, 1e-10);
    check([&](const ScalarVolume& f) {
        return resharp(f, ph.brain_mask, {.cg_tol = 1e-12, .cg_max_iter = 500});
    }, 1e-6);
    // PDF's normal equations stall around 5e-3 relative residual here and an
    // unconverged CG is only approximately linear in its right-hand side.
    check([&](const ScalarVolume& f) { return pdf(f, ph.brain_mask, ScalarVolume{}); }, 5e-2);
    check([&](const ScalarVolume& f) {
        return lbv(f, ph.brain_mask, {.cg_tol = 1e-12, .cg_max_iter = 5000});
    }, 1e-6);
}

TEST_CASE("RESHARP with a huge penalty returns almost nothing") {
    auto spec = fixtures::bfr_spec(true, true);
    spec.dims = {40, 40, 40};
    spec.brain_mask_radius_mm = 14;
    spec.spheres = {{{2, 0, 0}, 3.0, 0.5}};
    spec.background_sources = {{{0, 14, -14}, 2.0, 9.0}};
    const auto ph = build_phantom(spec);
    const auto f = forward_field(ph.chi + ph.chi_background,
                                 dipole_kernel(spec.dims, spec.spacing, fixtures::kAxial));
    const auto r = resharp(f, ph.brain_mask, {.lambda = 1e6});
    CHECK(masked_norm(r.local_field, r.mask_out) < 1e-5 * masked_norm(f, r.mask_out));
}

TEST_CASE("background removal validates its inputs") {
    const Dims d{16, 16, 16};
    const ScalarVolume f(d, fixtures::kIso1);
    CHECK_THROWS_AS(sharp(f, Mask({16, 16, 8}, true)), ValidationError);
    CHECK_THROWS_AS(sharp(f, Mask(d, false)), ValidationError);
    CHECK_THROWS_AS(resharp(f, sphere_mask(d, fixtures::kIso1, {0, 0, 0}, 6), {.radius_mm = 0.5}),
                    ValidationError);
}
