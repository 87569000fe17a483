#include <doctest.h>

#include <omp.h>

#include "fixtures.hpp"
#include "qsm/kernels.hpp"
#include "qsm/morphology.hpp"

using namespace qsm;
namespace ser = kernels::serial;
namespace par = kernels::parallel;

namespace {

const Dims kOdd{37, 23, 19}; // more than one reduction chunk, not a multiple of it

std::vector<std::uint8_t> random_bits(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = rng() % 10 != 0;
    return out;
}

} // namespace

TEST_CASE("reductions agree with the serial loops") {
    const auto a = fixtures::random_volume(kOdd, fixtures::kIso1, 1);
    const auto b = fixtures::random_volume(kOdd, fixtures::kIso1, 2);
    CHECK(par::dot(a.values(), b.values()) == doctest::Approx(ser::dot(a.values(), b.values())).epsilon(1e-12));
    CHECK(par::sum(a.values()) == doctest::Approx(ser::sum(a.values())).epsilon(1e-12));
}

TEST_CASE("reductions do not depend on the thread count") {
    const auto a = fixtures::random_volume(kOdd, fixtures::kIso1, 4);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double one = par::dot(a.values(), a.values());
    omp_set_num_threads(7);
    const double many = par::dot(a.values(), a.values());
    omp_set_num_threads(saved);
    CHECK(one == many);
}

TEST_CASE("elementwise kernels agree exactly") {
    const auto a = fixtures::random_volume(kOdd, fixtures::kIso1, 5);
    const auto b = fixtures::random_volume(kOdd, fixtures::kIso1, 6);
    std::vector<double> s(a.size()), p(a.size());

    ser::add_scaled(a.values(), -0.3, b.values(), s);
    par::add_scaled(a.values(), -0.3, b.values(), p);
    CHECK(s == p);

    ser::axpy(1.7, a.values(), s);
    par::axpy(1.7, a.values(), p);
    CHECK(s == p);

    const auto bits = random_bits(a.size(), 9);
    ser::mask_inplace(s, bits);
    par::mask_inplace(p, bits);
    CHECK(s == p);

    std::vector<std::complex<double>> cs(a.size()), cp(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) cs[i] = cp[i] = {a[i], b[i]};
    ser::multiply_spectrum(cs, b.values());
    par::multiply_spectrum(cp, b.values());
    CHECK(cs == cp);
}

TEST_CASE("stencil kernels agree exactly") {
    const auto a = fixtures::random_volume(kOdd, fixtures::kIso1, 7);
    std::vector<double> s(a.size()), p(a.size());
    for (int axis = 0; axis < 3; ++axis) {
        ser::forward_difference(a.values(), kOdd, axis, s);
        par::forward_difference(a.values(), kOdd, axis, p);
        CHECK(s == p);
        ser::forward_difference_adjoint(a.values(), kOdd, axis, s);
        par::forward_difference_adjoint(a.values(), kOdd, axis, p);
        CHECK(s == p);
        const std::vector<double> taps{0.1, -0.4, 1.0, 0.25, 0.05};
        for (auto pad : {kernels::Padding::zero, kernels::Padding::replicate}) {
            ser::convolve_axis(a.values(), kOdd, axis, taps, pad, s);
            par::convolve_axis(a.values(), kOdd, axis, taps, pad, p);
            CHECK(s == p);
        }
    }
    const Spacing sp{0.8, 1.0, 1.9};
    ser::laplacian7(a.values(), kOdd, sp, s);
    par::laplacian7(a.values(), kOdd, sp, p);
    CHECK(s == p);
}

TEST_CASE("erosion kernels agree exactly") {
    const auto bits = random_bits(kOdd.size(), 12);
    const auto offsets = ball_offsets(1.5, fixtures::kIso1);
    std::vector<std::uint8_t> s(bits.size()), p(bits.size());
    ser::erode(bits, kOdd, offsets, s);
    par::erode(bits, kOdd, offsets, p);
    CHECK(s == p);
}
