#include "qsm/bfr.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qsm/conjugate_gradient.hpp"
#include "qsm/dipole.hpp"
#include "qsm/error.hpp"
#include "qsm/fourier.hpp"
#include "qsm/kernels.hpp"
#include "qsm/morphology.hpp"

namespace qsm {

namespace kern = kernels::parallel;

namespace {

std::size_t wrap_index(long i, std::size_t n) {
    const long sn = static_cast<long>(n);
    return static_cast<std::size_t>(((i % sn) + sn) % sn);
}

void check_inputs(const ScalarVolume& f, const Mask& m2, const char* who) {
    require_same_dims(f.dims(), m2.dims(), who);
    require(m2.count() > 0, fmt::format("{}: brain mask is empty", who));
}

ScalarVolume spectral(const ScalarVolume& v, const std::vector<double>& filter) {
    return apply_real_filter(v, filter);
}

} // namespace

std::vector<double> smv_spectrum(const Dims& dims, const Spacing& spacing, double radius_mm,
                                 SmvShape shape) {
    require(radius_mm >= spacing.dx && radius_mm >= spacing.dy && radius_mm >= spacing.dz,
            fmt::format("SMV radius {} mm is smaller than a voxel", radius_mm));
    for (int a = 0; a < 3; ++a)
        require(2.0 * std::ceil(radius_mm / spacing[a]) + 1.0 <= static_cast<double>(dims[a]),
                "SMV sphere does not fit in the grid");

    ScalarVolume kernel(dims, spacing, Unit::dimensionless);
    if (shape == SmvShape::binary) {
        for (const auto& o : ball_offsets(radius_mm, spacing))
            kernel[dims.index(wrap_index(o[0], dims.nx), wrap_index(o[1], dims.ny),
                              wrap_index(o[2], dims.nz))] = 1.0;
    } else {
        const double sub[3] = {-1.0 / 3.0, 0.0, 1.0 / 3.0};
        const double r2 = radius_mm * radius_mm;
        long reach[3];
        for (int a = 0; a < 3; ++a)
            reach[a] = static_cast<long>(std::ceil(radius_mm / spacing[a] + 0.5));
        for (long z = -reach[2]; z <= reach[2]; ++z)
            for (long y = -reach[1]; y <= reach[1]; ++y)
                for (long x = -reach[0]; x <= reach[0]; ++x) {
                    int hits = 0;
                    for (double oz : sub)
                        for (double oy : sub)
                            for (double ox : sub) {
                                const double px = (x + ox) * spacing.dx;
                                const double py = (y + oy) * spacing.dy;
                                const double pz = (z + oz) * spacing.dz;
                                hits += px * px + py * py + pz * pz <= r2;
                            }
                    if (hits)
                        kernel[dims.index(wrap_index(x, dims.nx), wrap_index(y, dims.ny),
                                          wrap_index(z, dims.nz))] = hits / 27.0;
                }
    }
    const double mass = kern::sum(kernel.values());
    std::vector<std::complex<double>> data(kernel.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = kernel[i] / mass;
    fft3(data, dims, false);
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[i].real();
    return out;
}

ScalarVolume smv_convolve(const ScalarVolume& v, double radius_mm, SmvShape shape) {
    return spectral(v, smv_spectrum(v.dims(), v.spacing(), radius_mm, shape));
}

BfrResult sharp(const ScalarVolume& total_field, const Mask& m2, const SharpOptions& opt) {
    check_inputs(total_field, m2, "sharp");
    require(opt.threshold > 0 && opt.threshold < 1, "sharp: threshold must be in (0, 1)");
    const Mask m1 = erode_mask(m2, opt.radius_mm, total_field.spacing());
    require(m1.count() > 0, "sharp: eroded mask is empty");

    auto s = smv_spectrum(total_field.dims(), total_field.spacing(), opt.radius_mm, opt.shape);
    std::vector<double> high(s.size()), inverse(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        high[i] = 1.0 - s[i];
        inverse[i] = std::abs(high[i]) > opt.threshold ? 1.0 / high[i] : 0.0;
    }
    const ScalarVolume filtered = apply_mask(spectral(apply_mask(total_field, m2), high), m1);
    ScalarVolume local = remove_mean(apply_mask(spectral(filtered, inverse), m1), m1);
    return {local.with_unit(Unit::ppm), m1, "sharp", 0, 0.0, true};
}

BfrResult resharp(const ScalarVolume& total_field, const Mask& m2, const ResharpOptions& opt) {
    check_inputs(total_field, m2, "resharp");
    require(opt.lambda > 0, "resharp: lambda must be positive");
    const Dims& dims = total_field.dims();
    const Spacing& sp = total_field.spacing();
    const Mask m1 = erode_mask(m2, opt.radius_mm, sp);
    require(m1.count() > 0, "resharp: eroded mask is empty");

    auto s = smv_spectrum(dims, sp, opt.radius_mm, opt.shape);
    for (double& v : s) v = 1.0 - v;

    // C^T M1 C, with C = delta - rho real and even, hence self-adjoint.
    auto normal = [&](std::span<const double> in) {
        ScalarVolume v(dims, sp, std::vector<double>(in.begin(), in.end()));
        return spectral(apply_mask(spectral(v, s), m1), s);
    };
    const ScalarVolume rhs = normal(apply_mask(total_field, m2).values());

    std::vector<double> x(total_field.size(), 0.0);
    const auto cg = conjugate_gradient(
        [&](std::span<const double> in, std::span<double> out) {
            const ScalarVolume a = normal(in);
            kern::add_scaled(a.values(), opt.lambda, in, out);
        },
        rhs.values(), x, opt.cg_tol, opt.cg_max_iter);

    ScalarVolume local = remove_mean(ScalarVolume(dims, sp, std::move(x), Unit::ppm), m1);
    return {std::move(local), m1, "resharp", cg.iterations, cg.relative_residual, cg.converged};
}

BfrResult pdf(const ScalarVolume& total_field, const Mask& m2, const ScalarVolume& weight,
              const PdfOptions& opt) {
    check_inputs(total_field, m2, "pdf");
    const Dims& dims = total_field.dims();
    const Spacing& sp = total_field.spacing();
    std::vector<double> w2(total_field.size(), 1.0);
    if (!weight.empty()) {
        require_same_dims(weight.dims(), dims, "pdf weight");
        for (std::size_t i = 0; i < w2.size(); ++i) {
            require(weight[i] >= 0, "pdf: weights must be nonnegative");
            w2[i] = weight[i] * weight[i];
        }
    }
    for (std::size_t i = 0; i < w2.size(); ++i)
        if (!m2[i]) w2[i] = 0.0;

    const DipoleKernel d = dipole_kernel(dims, sp, normalized(opt.b0_dir));
    const Mask outside = ~m2;
    auto weighted_adjoint = [&](ScalarVolume r) {
        for (std::size_t i = 0; i < r.size(); ++i) r[i] *= w2[i];
        return apply_mask(forward_field(r, d), outside);
    };

    const ScalarVolume rhs = weighted_adjoint(total_field);
    std::vector<double> x(total_field.size(), 0.0);
    const auto cg = conjugate_gradient(
        [&](std::span<const double> in, std::span<double> out) {
            ScalarVolume v(dims, sp, std::vector<double>(in.begin(), in.end()));
            const ScalarVolume a = weighted_adjoint(forward_field(apply_mask(v, outside), d));
            std::copy(a.values().begin(), a.values().end(), out.begin());
        },
        rhs.values(), x, opt.cg_tol, opt.cg_max_iter);

    const ScalarVolume background =
        forward_field(apply_mask(ScalarVolume(dims, sp, std::move(x)), outside), d);
    ScalarVolume local = remove_mean(apply_mask(total_field - background, m2), m2);
    return {local.with_unit(Unit::ppm), m2, "pdf", cg.iterations, cg.relative_residual,
            cg.converged};
}

BfrResult lbv(const ScalarVolume& total_field, const Mask& m2, const LbvOptions& opt) {
    check_inputs(total_field, m2, "lbv");
    const Dims& dims = total_field.dims();
    const Spacing& sp = total_field.spacing();
    const Mask shell = boundary_shell(m2);
    const Mask interior = m2 - shell;
    require(interior.count() > 0, "lbv: mask has no interior");

    // -L restricted to the interior is SPD; shell values enter as Dirichlet data.
    std::vector<double> tmp(total_field.size());
    std::vector<double> rhs(total_field.size());
    {
        const ScalarVolume known = apply_mask(total_field, shell);
        kern::laplacian7(known.values(), dims, sp, rhs);
        kern::mask_inplace(rhs, interior.values());
    }
    std::vector<double> x(total_field.size(), 0.0);
    const auto cg = conjugate_gradient(
        [&](std::span<const double> in, std::span<double> out) {
            std::copy(in.begin(), in.end(), tmp.begin());
            kern::mask_inplace(tmp, interior.values());
            kern::laplacian7(tmp, dims, sp, out);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = interior[i] ? -out[i] : 0.0;
        },
        rhs, x, opt.cg_tol, opt.cg_max_iter);

    ScalarVolume local(dims, sp, Unit::ppm);
    for (std::size_t i = 0; i < local.size(); ++i)
        local[i] = interior[i] ? total_field[i] - x[i] : 0.0;
    local = remove_mean(local, m2);
    return {std::move(local), m2, "lbv", cg.iterations, cg.relative_residual, cg.converged};
}

} // namespace qsm
