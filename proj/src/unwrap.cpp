#include "qsm/unwrap.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/fourier.hpp"

namespace qsm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Continuous Laplacian -4 pi^2 |k|^2 applied in the cosine basis.
std::vector<double> cosine_symbol(const Dims& dims, const Spacing& spacing) {
    const auto grid = FrequencyGrid::cosine(dims, spacing);
    std::vector<double> sym(dims.size());
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x)
                sym[dims.index(x, y, z)] = -4.0 * std::numbers::pi * std::numbers::pi *
                                           grid.k2(x, y, z);
    return sym;
}

std::vector<double> apply_laplacian(std::vector<double> v, const Dims& dims,
                                    const std::vector<double>& sym) {
    cosine_forward(v, dims);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= sym[i];
    cosine_inverse(v, dims);
    return v;
}

} // namespace

ScalarVolume laplacian_unwrap(const ScalarVolume& wrapped, const Mask& mask) {
    require_same_dims(wrapped.dims(), mask.dims(), "laplacian_unwrap");
    require(mask.count() > 0, "laplacian_unwrap: empty reference mask");
    const Dims& dims = wrapped.dims();
    const auto sym = cosine_symbol(dims, wrapped.spacing());

    std::vector<double> c(wrapped.size()), s(wrapped.size());
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
        c[i] = std::cos(wrapped[i]);
        s[i] = std::sin(wrapped[i]);
    }
    const auto lap_s = apply_laplacian(s, dims, sym);
    const auto lap_c = apply_laplacian(c, dims, sym);

    std::vector<double> u(wrapped.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = c[i] * lap_s[i] - s[i] * lap_c[i];
    cosine_forward(u, dims);
    u[0] = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) u[i] /= sym[i];
    cosine_inverse(u, dims);

    // Circular mean of the residual phase puts u on the same branch as the input,
    // then the median integer offset removes any whole turns.
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < u.size(); ++i)
        if (mask[i]) acc += std::polar(1.0, wrapped[i] - u[i]);
    const double shift = std::arg(acc);
    std::vector<double> turns;
    turns.reserve(mask.count());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] += shift;
        if (mask[i]) turns.push_back(std::round((u[i] - wrapped[i]) / kTwoPi));
    }
    auto mid = turns.begin() + static_cast<std::ptrdiff_t>(turns.size() / 2);
    std::nth_element(turns.begin(), mid, turns.end());
    const double offset = kTwoPi * *mid;
    for (double& v : u) v -= offset;

    return ScalarVolume(dims, wrapped.spacing(), std::move(u), Unit::radians);
}

ScalarVolume laplacian_unwrap(const ScalarVolume& wrapped) {
    return laplacian_unwrap(wrapped, Mask(wrapped.dims(), true));
}

FieldFit fit_field(const std::vector<ScalarVolume>& unwrapped, const AcquisitionMeta& meta,
                   const std::vector<ScalarVolume>& weights, FitOptions options) {
    require(!unwrapped.empty(), "fit_field: no echoes");
    require(unwrapped.size() == meta.echo_times_s.size(),
            fmt::format("fit_field: {} phase volumes but {} echo times", unwrapped.size(),
                        meta.echo_times_s.size()));
    require(weights.empty() || weights.size() == unwrapped.size(),
            "fit_field: need one weight volume per echo");
    require(!options.with_offset || unwrapped.size() >= 2,
            "fit_field: the offset model needs at least two echoes");
    const Dims& dims = unwrapped.front().dims();
    for (const auto& p : unwrapped) require_same_dims(p.dims(), dims, "fit_field");
    for (const auto& w : weights) {
        require_same_dims(w.dims(), dims, "fit_field weights");
        for (double v : w.values()) require(v >= 0, "fit_field: weights must be nonnegative");
    }

    std::vector<double> scale;
    for (double te : meta.echo_times_s) scale.push_back(meta.radians_per_ppm(te));

    FieldFit out{ScalarVolume(dims, unwrapped.front().spacing(), Unit::ppm), Mask(dims)};
    const std::size_t n = scale.size();
    for (std::size_t i = 0; i < out.field.size(); ++i) {
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t e = 0; e < n; ++e) {
            const double w = weights.empty() ? 1.0 : weights[e][i];
            const double x = scale[e], y = unwrapped[e][i];
            sw += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
        }
        double slope = 0.0;
        bool ok = false;
        if (options.with_offset) {
            const double det = sw * sxx - sx * sx;
            ok = det > 1e-12 * sxx * sw && det > 0;
            if (ok) slope = (sw * sxy - sx * sy) / det;
        } else {
            ok = sxx > 0;
            if (ok) slope = sxy / sxx;
        }
        out.field[i] = slope;
        out.valid.set(i, ok);
    }
    return out;
}

std::vector<ScalarVolume> magnitude_weights(const std::vector<ScalarVolume>& magnitudes) {
    std::vector<ScalarVolume> out;
    out.reserve(magnitudes.size());
    for (const auto& m : magnitudes) {
        ScalarVolume w(m.dims(), m.spacing(), Unit::arbitrary);
        for (std::size_t i = 0; i < m.size(); ++i) w[i] = m[i] * m[i];
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace qsm
