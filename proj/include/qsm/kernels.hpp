#pragma once

// Data-parallel voxel kernels. Every kernel exists twice with identical
// signatures: `serial` is the plain reference loop, `parallel` is the OpenMP
// version used by the library. Tests check the two agree; bench/ times them.
//
// Reductions in `parallel` sum fixed-size chunks and then combine the chunk
// partials in order, so results do not depend on the thread count.

#include <array>
#include <complex>
#include <cstdint>
#include <span>

#include "qsm/volume.hpp"

namespace qsm::kernels {

enum class Padding { zero, replicate };

using Offset = std::array<int, 3>;

#define QSM_KERNEL_DECLARATIONS                                                                  \
    double dot(std::span<const double> a, std::span<const double> b);                             \
    double sum(std::span<const double> a);                                                        \
    /* y += alpha * x */                                                                          \
    void axpy(double alpha, std::span<const double> x, std::span<double> y);                      \
    /* out = a + alpha * b */                                                                     \
    void add_scaled(std::span<const double> a, double alpha, std::span<const double> b,           \
                    std::span<double> out);                                                       \
    /* zero wherever mask is 0 */                                                                 \
    void mask_inplace(std::span<double> x, std::span<const std::uint8_t> mask);                   \
    /* forward difference along axis, 0 on the far face */                                       \
    void forward_difference(std::span<const double> in, const Dims& dims, int axis,               \
                            std::span<double> out);                                               \
    /* exact adjoint of forward_difference */                                                     \
    void forward_difference_adjoint(std::span<const double> in, const Dims& dims, int axis,       \
                                    std::span<double> out);                                       \
    /* 7-point Laplacian in physical units; neighbours outside the grid count as 0 */            \
    void laplacian7(std::span<const double> in, const Dims& dims, const Spacing& spacing,         \
                    std::span<double> out);                                                       \
    /* out[i] = 1 iff in[i + o] is set for every offset (outside the grid counts as unset) */    \
    void erode(std::span<const std::uint8_t> in, const Dims& dims,                                \
               std::span<const Offset> offsets, std::span<std::uint8_t> out);                     \
    /* 1D correlation with an odd-length centred tap vector along one axis */                    \
    void convolve_axis(std::span<const double> in, const Dims& dims, int axis,                    \
                       std::span<const double> taps, Padding padding, std::span<double> out);     \
    void multiply_spectrum(std::span<std::complex<double>> data, std::span<const double> filter);

namespace serial {
QSM_KERNEL_DECLARATIONS
} // namespace serial

namespace parallel {
QSM_KERNEL_DECLARATIONS
} // namespace parallel

#undef QSM_KERNEL_DECLARATIONS

} // namespace qsm::kernels
