#include "qsm/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace qsm::kernels::serial {

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) acc += v;
    return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void add_scaled(std::span<const double> a, double alpha, std::span<const double> b,
                std::span<double> out) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + alpha * b[i];
}

void mask_inplace(std::span<double> x, std::span<const std::uint8_t> mask) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!mask[i]) x[i] = 0.0;
}

void forward_difference(std::span<const double> in, const Dims& dims, int axis,
                        std::span<double> out) {
    const std::size_t stride = dims.stride(axis);
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const std::size_t i = dims.index(x, y, z);
                const std::size_t c = axis == 0 ? x : (axis == 1 ? y : z);
                out[i] = c + 1 < dims[axis] ? in[i + stride] - in[i] : 0.0;
            }
}

void forward_difference_adjoint(std::span<const double> in, const Dims& dims, int axis,
                                std::span<double> out) {
    const std::size_t stride = dims.stride(axis);
    const std::size_t n = dims[axis];
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const std::size_t i = dims.index(x, y, z);
                const std::size_t c = axis == 0 ? x : (axis == 1 ? y : z);
                double v = 0.0;
                if (c >= 1) v += in[i - stride];
                if (c + 1 < n) v -= in[i];
                out[i] = v;
            }
}

void laplacian7(std::span<const double> in, const Dims& dims, const Spacing& spacing,
                std::span<double> out) {
    const double w[3] = {1.0 / (spacing.dx * spacing.dx), 1.0 / (spacing.dy * spacing.dy),
                         1.0 / (spacing.dz * spacing.dz)};
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const std::size_t i = dims.index(x, y, z);
                const std::size_t c[3] = {x, y, z};
                double acc = 0.0;
                for (int a = 0; a < 3; ++a) {
                    const std::size_t s = dims.stride(a);
                    const double lo = c[a] >= 1 ? in[i - s] : 0.0;
                    const double hi = c[a] + 1 < dims[a] ? in[i + s] : 0.0;
                    acc += w[a] * (lo + hi - 2.0 * in[i]);
                }
                out[i] = acc;
            }
}

void erode(std::span<const std::uint8_t> in, const Dims& dims, std::span<const Offset> offsets,
           std::span<std::uint8_t> out) {
    const long n[3] = {static_cast<long>(dims.nx), static_cast<long>(dims.ny),
                       static_cast<long>(dims.nz)};
    for (long z = 0; z < n[2]; ++z)
        for (long y = 0; y < n[1]; ++y)
            for (long x = 0; x < n[0]; ++x) {
                const std::size_t i = dims.index(x, y, z);
                bool keep = in[i] != 0;
                for (std::size_t k = 0; keep && k < offsets.size(); ++k) {
                    const long px = x + offsets[k][0];
                    const long py = y + offsets[k][1];
                    const long pz = z + offsets[k][2];
                    if (px < 0 || py < 0 || pz < 0 || px >= n[0] || py >= n[1] || pz >= n[2] ||
                        !in[dims.index(px, py, pz)])
                        keep = false;
                }
                out[i] = keep ? 1 : 0;
            }
}

void convolve_axis(std::span<const double> in, const Dims& dims, int axis,
                   std::span<const double> taps, Padding padding, std::span<double> out) {
    const long half = static_cast<long>(taps.size() / 2);
    const long n = static_cast<long>(dims[axis]);
    const std::size_t stride = dims.stride(axis);
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const std::size_t i = dims.index(x, y, z);
                const long c = static_cast<long>(axis == 0 ? x : (axis == 1 ? y : z));
                const std::size_t line = i - static_cast<std::size_t>(c) * stride;
                double acc = 0.0;
                for (long t = -half; t <= half; ++t) {
                    long p = c + t;
                    if (p < 0 || p >= n) {
                        if (padding == Padding::zero) continue;
                        p = std::clamp(p, 0L, n - 1);
                    }
                    acc += taps[static_cast<std::size_t>(t + half)] *
                           in[line + static_cast<std::size_t>(p) * stride];
                }
                out[i] = acc;
            }
}

void multiply_spectrum(std::span<std::complex<double>> data, std::span<const double> filter) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= filter[i];
}

} // namespace qsm::kernels::serial
