#include "qsm/inversion.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qsm/descent.hpp"
#include "qsm/error.hpp"
#include "qsm/fourier.hpp"
#include "qsm/gradient.hpp"
#include "qsm/phantom.hpp"

namespace qsm {

double default_phase_scale() {
    AcquisitionMeta meta;
    meta.b0_tesla = 3.0;
    return meta.radians_per_ppm(0.020);
}

ScalarVolume tkd(const ScalarVolume& local_field, const DipoleKernel& kernel, double threshold) {
    require_same_dims(local_field.dims(), kernel.dims(), "tkd");
    require(threshold > 0 && threshold < 2.0 / 3.0, "tkd: threshold must be in (0, 2/3)");
    std::vector<double> inverse(kernel.values().size());
    for (std::size_t i = 0; i < inverse.size(); ++i) {
        const double d = kernel[i];
        if (d == 0.0)
            inverse[i] = 0.0;
        else if (std::abs(d) >= threshold)
            inverse[i] = 1.0 / d;
        else
            inverse[i] = 1.0 / (d > 0 ? threshold : -threshold);
    }
    return apply_real_filter(local_field, inverse).with_unit(Unit::ppm);
}

namespace {

void check_problem(const NtvProblem& p, const ScalarVolume& chi) {
    require_same_dims(chi.dims(), p.field.dims(), "nonlinear_tv chi");
    require_same_dims(p.mask.dims(), p.field.dims(), "nonlinear_tv mask");
    require_same_dims(p.kernel.dims(), p.field.dims(), "nonlinear_tv kernel");
    if (!p.weight.empty()) require_same_dims(p.weight.dims(), p.field.dims(), "nonlinear_tv W");
}

double w2_at(const NtvProblem& p, std::size_t i) {
    return p.weight.empty() ? 1.0 : p.weight[i] * p.weight[i];
}

} // namespace

double NtvProblem::loss(const ScalarVolume& chi) const {
    check_problem(*this, chi);
    const ScalarVolume model = forward_field(chi, kernel);
    double data = 0.0;
    for (std::size_t i = 0; i < chi.size(); ++i)
        if (mask[i])
            data += w2_at(*this, i) * 2.0 * (1.0 - std::cos(phase_scale * (field[i] - model[i])));
    return data + (lambda_tv > 0 ? lambda_tv * smoothed_total_variation(chi, tv_epsilon) : 0.0);
}

ScalarVolume NtvProblem::gradient(const ScalarVolume& chi) const {
    check_problem(*this, chi);
    const ScalarVolume model = forward_field(chi, kernel);
    ScalarVolume r(chi.dims(), chi.spacing(), Unit::ppm);
    for (std::size_t i = 0; i < chi.size(); ++i)
        if (mask[i])
            r[i] = -2.0 * phase_scale * w2_at(*this, i) *
                   std::sin(phase_scale * (field[i] - model[i]));
    ScalarVolume g = forward_field(r, kernel);
    if (lambda_tv > 0) g = g + lambda_tv * smoothed_total_variation_gradient(chi, tv_epsilon);
    return apply_mask(g, mask);
}

InversionResult nonlinear_tv_invert(const ScalarVolume& local_field, const ScalarVolume& weight,
                                    const Mask& mask, const DipoleKernel& kernel,
                                    const NtvOptions& options) {
    require(options.lambda_tv >= 0, "nonlinear_tv: lambda_tv must be nonnegative");
    require(options.iterations >= 1, "nonlinear_tv: iterations must be at least 1");
    require(options.phase_scale > 0, "nonlinear_tv: phase scale must be positive");
    const NtvProblem problem{local_field, weight,  mask,
                             kernel,      options.lambda_tv, options.phase_scale};

    Blocks x{ScalarVolume(local_field.dims(), local_field.spacing(), Unit::ppm)};
    DescentOptions descent;
    descent.iterations = options.iterations;
    descent.initial_step = options.initial_step;
    const auto trace = gradient_descent(
        x, [&](const Blocks& b) { return problem.loss(b[0]); },
        [&](const Blocks& b) { return Blocks{problem.gradient(b[0])}; }, descent);
    x[0].check_finite("nonlinear_tv result");
    return {std::move(x[0]), trace.loss};
}

ScalarVolume cosmos(const std::vector<ScalarVolume>& fields, const std::vector<Vec3>& b0_dirs,
                    double epsilon) {
    require(fields.size() >= 2, "cosmos: need at least two orientations");
    require(fields.size() == b0_dirs.size(), "cosmos: one B0 direction per field");
    require(epsilon > 0, "cosmos: epsilon must be positive");
    const Vec3& first = b0_dirs.front();
    bool spread = false;
    for (const auto& d : b0_dirs) {
        const Vec3 c{first[1] * d[2] - first[2] * d[1], first[2] * d[0] - first[0] * d[2],
                     first[0] * d[1] - first[1] * d[0]};
        if (std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) > 1e-6) spread = true;
    }
    require(spread, "cosmos: B0 directions are collinear");

    const Dims& dims = fields.front().dims();
    const Spacing& sp = fields.front().spacing();
    std::vector<std::complex<double>> num(dims.size());
    std::vector<double> den(dims.size(), epsilon);
    for (std::size_t o = 0; o < fields.size(); ++o) {
        require_same_dims(fields[o].dims(), dims, "cosmos");
        const DipoleKernel d = dipole_kernel(dims, sp, b0_dirs[o]);
        const SpectralVolume b = fourier_forward(fields[o]);
        for (std::size_t i = 0; i < num.size(); ++i) {
            num[i] += d[i] * b[i];
            den[i] += d[i] * d[i];
        }
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] /= den[i];
    return fourier_inverse(SpectralVolume(dims, sp, std::move(num)), Unit::ppm);
}

} // namespace qsm
