#include <doctest.h>

#include "fixtures.hpp"
#include "qsm/gradient.hpp"
#include "qsm/kernels.hpp"

using namespace qsm;

namespace {

Mask blob(const Dims& d, const Spacing& sp) {
    Mask m = sphere_mask(d, sp, {0, 0, 0}, 9.0);
    Mask extra = sphere_mask(d, sp, {6, 4, 2}, 6.0);
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, m[i] || extra[i]);
    return m;
}

// Keep a voxel iff every in-grid voxel centre within r is in the mask and no
// such centre falls off the grid.
Mask brute_force_erode(const Mask& m, double r, const Spacing& sp) {
    const Dims& d = m.dims();
    Mask out(d);
    const long reach[3] = {long(r / sp.dx) + 1, long(r / sp.dy) + 1, long(r / sp.dz) + 1};
    for (long z = 0; z < long(d.nz); ++z)
        for (long y = 0; y < long(d.ny); ++y)
            for (long x = 0; x < long(d.nx); ++x) {
                if (!m[d.index(x, y, z)]) continue;
                bool keep = true;
                for (long k = -reach[2]; k <= reach[2] && keep; ++k)
                    for (long j = -reach[1]; j <= reach[1] && keep; ++j)
                        for (long i = -reach[0]; i <= reach[0] && keep; ++i) {
                            const double dd = (i * sp.dx) * (i * sp.dx) +
                                              (j * sp.dy) * (j * sp.dy) + (k * sp.dz) * (k * sp.dz);
                            if (dd > r * r) continue;
                            const long px = x + i, py = y + j, pz = z + k;
                            if (px < 0 || py < 0 || pz < 0 || px >= long(d.nx) ||
                                py >= long(d.ny) || pz >= long(d.nz) || !m[d.index(px, py, pz)])
                                keep = false;
                        }
                out.set(d.index(x, y, z), keep);
            }
    return out;
}

} // namespace

TEST_CASE("ball offsets count the inclusive neighbourhood") {
    CHECK(ball_offsets(1.0, fixtures::kIso1).size() == 7);
    CHECK(ball_offsets(std::sqrt(2.0), fixtures::kIso1).size() == 19);
    CHECK(ball_offsets(std::sqrt(3.0), fixtures::kIso1).size() == 27);
    CHECK(ball_offsets(0.0, fixtures::kIso1).size() == 1);
}

TEST_CASE("erosion matches a brute-force oracle") {
    const Dims d{30, 28, 20};
    for (const Spacing sp : {Spacing{1, 1, 1}, Spacing{1.0, 1.5, 2.0}}) {
        const Mask m = blob(d, sp);
        for (double r : {1.0, 2.5, 4.0}) CHECK(erode_mask(m, r, sp) == brute_force_erode(m, r, sp));
    }
}

TEST_CASE("erosion is monotone in the radius") {
    const Mask m = blob({30, 28, 20}, fixtures::kIso1);
    Mask prev = m;
    for (double r : {0.0, 1.0, 2.0, 3.0, 4.0}) {
        const Mask e = erode_mask(m, r, fixtures::kIso1);
        CHECK(e.is_subset_of(prev));
        prev = e;
    }
    CHECK(erode_mask(m, 0.0, fixtures::kIso1) == m);
}

TEST_CASE("erosion treats the grid edge as outside") {
    const Mask full({8, 8, 8}, true);
    const Mask e = erode_mask(full, 1.0, fixtures::kIso1);
    CHECK(e.count() == 6 * 6 * 6);
}

TEST_CASE("boundary shell of a cube") {
    Mask cube({6, 6, 6});
    for (std::size_t z = 1; z < 5; ++z)
        for (std::size_t y = 1; y < 5; ++y)
            for (std::size_t x = 1; x < 5; ++x) cube.set(cube.dims().index(x, y, z), true);
    CHECK(boundary_shell(cube).count() == 64 - 8);
}

TEST_CASE("gradient adjoint identity") {
    const Dims d{9, 7, 6};
    const auto u = fixtures::random_volume(d, fixtures::kIso1, 21);
    const auto v = fixtures::random_volume(d, fixtures::kIso1, 22);
    for (Axis a : {Axis::x, Axis::y, Axis::z}) {
        const double lhs = kernels::serial::dot(gradient_forward(u, a).values(), v.values());
        const double rhs = kernels::serial::dot(u.values(), gradient_adjoint(v, a).values());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    }
}

TEST_CASE("gradient of a ramp") {
    const Dims d{5, 3, 2};
    ScalarVolume ramp(d, fixtures::kIso1);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) ramp[d.index(x, y, z)] = 2.0 * x;
    const auto g = gradient_forward(ramp, Axis::x);
    CHECK(g.at(0, 1, 1) == 2.0);
    CHECK(g.at(4, 1, 1) == 0.0);
    CHECK(gradient_forward(ramp, Axis::y).at(2, 1, 0) == 0.0);
    CHECK(total_variation(ramp) == doctest::Approx(2.0 * 4 * 3 * 2));
}

TEST_CASE("smoothed TV is zero on constants and its gradient is consistent") {
    const Dims d{6, 5, 4};
    ScalarVolume flat(d, fixtures::kIso1, std::vector<double>(d.size(), 3.0));
    CHECK(smoothed_total_variation(flat, 1e-8) == 0.0);

    const auto v = fixtures::random_volume(d, fixtures::kIso1, 5);
    const double eps = 1e-3;
    const auto g = smoothed_total_variation_gradient(v, eps);
    for (std::size_t i : {0ul, 17ul, 63ul, d.size() - 1}) {
        auto hi = v, lo = v;
        hi[i] += 1e-6;
        lo[i] -= 1e-6;
        const double fd = (smoothed_total_variation(hi, eps) - smoothed_total_variation(lo, eps)) / 2e-6;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}
