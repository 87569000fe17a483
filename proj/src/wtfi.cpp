#include "qsm/wtfi.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qsm/bfr.hpp"
#include "qsm/descent.hpp"
#include "qsm/error.hpp"
#include "qsm/gradient.hpp"
#include "qsm/inversion.hpp"

namespace qsm {

namespace {

void check_state(const WtfiState& s, const WtfiInputs& in) {
    const Dims& d = in.total_field.dims();
    require_same_dims(s.chi1.dims(), d, "wtfi chi1");
    require_same_dims(s.fl1.dims(), d, "wtfi fL1");
    require_same_dims(s.chi2.dims(), d, "wtfi chi2");
    require_same_dims(s.fl2.dims(), d, "wtfi fL2");
}

void check_weights(const LossWeights& w) {
    for (double v : {w.lambda1, w.lambda2, w.lambda3, w.lambda4})
        require(std::isfinite(v) && v >= 0, "loss weights must be finite and nonnegative");
}

// Per-voxel phase residuals s (target - D chi) for both exponential terms.
struct Residuals {
    ScalarVolume a; ///< m1 term
    ScalarVolume b; ///< m2 term
};

Residuals residuals(const WtfiState& s, const WtfiInputs& in) {
    const ScalarVolume d1 = forward_field(s.chi1, in.kernel);
    const ScalarVolume d2 = forward_field(s.chi2, in.kernel);
    Residuals r{ScalarVolume(d1.dims(), d1.spacing()), ScalarVolume(d1.dims(), d1.spacing())};
    for (std::size_t i = 0; i < d1.size(); ++i) {
        r.a[i] = in.phase_scale * (in.supervision[i] - d1[i]);
        r.b[i] = in.phase_scale * (s.fl2[i] - d2[i]);
    }
    return r;
}

struct Terms {
    double chi1 = 0, fl1 = 0, consistency = 0, chi_consistency = 0;
};

Terms squared_terms(const WtfiState& s, const WtfiInputs& in, const Residuals& r) {
    Terms t;
    for (std::size_t i = 0; i < r.a.size(); ++i) {
        const double w2 = in.weight[i] * in.weight[i];
        if (in.m1[i]) {
            t.chi1 += w2 * 2.0 * (1.0 - std::cos(r.a[i]));
            const double dl = s.fl1[i] - in.supervision[i];
            t.fl1 += dl * dl;
            const double dc = s.chi1[i] - s.chi2[i];
            t.chi_consistency += dc * dc;
        }
        if (in.m2[i]) t.consistency += w2 * 2.0 * (1.0 - std::cos(r.b[i]));
    }
    return t;
}

} // namespace

WtfiInputs make_wtfi_inputs(ScalarVolume total_field, Mask m1, Mask m2, ScalarVolume supervision,
                            ScalarVolume weight, DipoleKernel kernel, double phase_scale) {
    const Dims& d = total_field.dims();
    require_same_dims(m1.dims(), d, "wtfi m1");
    require_same_dims(m2.dims(), d, "wtfi m2");
    require_same_dims(supervision.dims(), d, "wtfi supervision");
    require_same_dims(kernel.dims(), d, "wtfi kernel");
    require(m1.is_subset_of(m2), "wtfi: m1 must lie inside m2");
    require(m2.count() > 0, "wtfi: m2 is empty");
    require(phase_scale > 0, "wtfi: phase scale must be positive");
    if (weight.empty()) weight = ScalarVolume(d, total_field.spacing(), std::vector<double>(d.size(), 1.0));
    require_same_dims(weight.dims(), d, "wtfi weight");
    const double mean = masked_mean(weight, m2);
    require(mean > 0, "wtfi: weight has zero mean over m2");
    weight = apply_mask((1.0 / mean) * weight, m2);
    supervision = apply_mask(supervision, m1);
    return {std::move(total_field), std::move(m1),     std::move(m2),
            std::move(supervision), std::move(weight), std::move(kernel),
            phase_scale};
}

LossBreakdown evaluate_losses(const WtfiState& state, const WtfiInputs& inputs,
                              const LossWeights& weights) {
    check_state(state, inputs);
    check_weights(weights);
    const Terms t = squared_terms(state, inputs, residuals(state, inputs));
    LossBreakdown out;
    out.sq_chi1 = t.chi1;
    out.sq_fl1 = t.fl1;
    out.sq_consistency = t.consistency;
    out.sq_chi_consistency = t.chi_consistency;
    out.smoothed_tv = smoothed_total_variation(state.chi2, kTvEpsilon);
    out.objective = t.chi1 + weights.lambda1 * t.fl1 + weights.lambda2 * t.consistency +
                    weights.lambda3 * t.chi_consistency + weights.lambda4 * out.smoothed_tv;

    out.l_chi1 = std::sqrt(t.chi1);
    out.l_fl1 = std::sqrt(t.fl1);
    out.l_consistency = std::sqrt(t.consistency);
    out.l_chi_consistency = std::sqrt(t.chi_consistency);
    out.l_tv = total_variation(state.chi2);
    out.l_total = out.l_chi1 + weights.lambda1 * out.l_fl1 + weights.lambda2 * out.l_consistency +
                  weights.lambda3 * out.l_chi_consistency + weights.lambda4 * out.l_tv;
    return out;
}

double wtfi_objective(const WtfiState& state, const WtfiInputs& inputs,
                      const LossWeights& weights) {
    check_state(state, inputs);
    const Terms t = squared_terms(state, inputs, residuals(state, inputs));
    double total = t.chi1 + weights.lambda1 * t.fl1 + weights.lambda2 * t.consistency +
                   weights.lambda3 * t.chi_consistency;
    if (weights.lambda4 > 0)
        total += weights.lambda4 * smoothed_total_variation(state.chi2, kTvEpsilon);
    return total;
}

WtfiState loss_gradients(const WtfiState& state, const WtfiInputs& inputs,
                         const LossWeights& weights) {
    check_state(state, inputs);
    check_weights(weights);
    const Residuals r = residuals(state, inputs);
    const Dims& d = state.chi1.dims();
    const Spacing& sp = state.chi1.spacing();
    const double s = inputs.phase_scale;

    ScalarVolume p1(d, sp), p2(d, sp), g_fl1(d, sp, Unit::ppm), g_fl2(d, sp, Unit::ppm),
        chi_diff(d, sp);
    for (std::size_t i = 0; i < r.a.size(); ++i) {
        const double w2 = inputs.weight[i] * inputs.weight[i];
        if (inputs.m1[i]) {
            p1[i] = -2.0 * s * w2 * std::sin(r.a[i]);
            g_fl1[i] = weights.lambda1 * 2.0 * (state.fl1[i] - inputs.supervision[i]);
            chi_diff[i] = weights.lambda3 * 2.0 * (state.chi1[i] - state.chi2[i]);
        }
        if (inputs.m2[i]) {
            const double sb = 2.0 * s * w2 * std::sin(r.b[i]);
            p2[i] = -weights.lambda2 * sb;
            g_fl2[i] = weights.lambda2 * sb;
        }
    }
    ScalarVolume g_chi1 = forward_field(p1, inputs.kernel) + chi_diff;
    ScalarVolume g_chi2 = forward_field(p2, inputs.kernel) - chi_diff;
    if (weights.lambda4 > 0)
        g_chi2 = g_chi2 +
                 weights.lambda4 * smoothed_total_variation_gradient(state.chi2, kTvEpsilon);
    return {apply_mask(g_chi1, inputs.m1), g_fl1, apply_mask(g_chi2, inputs.m2), g_fl2};
}

WtfiState initial_state(const WtfiInputs& inputs, const WtfiOptions& options) {
    ScalarVolume fl2;
    switch (options.seed) {
    case WtfiSeed::smv: {
        const ScalarVolume masked = apply_mask(inputs.total_field, inputs.m2);
        fl2 = apply_mask(masked - smv_convolve(masked, options.seed_radius_mm), inputs.m2);
        break;
    }
    case WtfiSeed::total: fl2 = apply_mask(inputs.total_field, inputs.m2); break;
    case WtfiSeed::pdf:
        fl2 = pdf(inputs.total_field, inputs.m2, inputs.weight,
                  PdfOptions{1e-6, 300, inputs.kernel.b0_dir()})
                  .local_field;
        break;
    }
    const ScalarVolume chi = tkd(inputs.supervision, inputs.kernel, options.tkd_threshold);
    return {apply_mask(chi, inputs.m1), inputs.supervision, apply_mask(chi, inputs.m2),
            fl2.with_unit(Unit::ppm)};
}

WtfiResult wtfi_solve(const WtfiInputs& inputs, const LossWeights& weights,
                      const WtfiOptions& options) {
    require(options.iterations >= 1, "wtfi: iterations must be at least 1");
    check_weights(weights);
    const WtfiState seed = initial_state(inputs, options);
    Blocks x{seed.chi1, seed.fl1, seed.chi2, seed.fl2};
    auto as_state = [](const Blocks& b) { return WtfiState{b[0], b[1], b[2], b[3]}; };

    DescentOptions descent;
    descent.iterations = options.iterations;
    descent.initial_step = options.step.initial_step;
    descent.block_scales.assign(options.step.scales.begin(), options.step.scales.end());
    const auto trace = gradient_descent(
        x, [&](const Blocks& b) { return wtfi_objective(as_state(b), inputs, weights); },
        [&](const Blocks& b) {
            WtfiState g = loss_gradients(as_state(b), inputs, weights);
            return Blocks{std::move(g.chi1), std::move(g.fl1), std::move(g.chi2),
                          std::move(g.fl2)};
        },
        descent);
    for (const auto& v : x) v.check_finite("wtfi state");
    return {as_state(x), trace.loss, trace.stalled};
}

WtfiSeed seed_from_string(std::string_view name) {
    if (name == "smv") return WtfiSeed::smv;
    if (name == "total") return WtfiSeed::total;
    if (name == "pdf") return WtfiSeed::pdf;
    throw ValidationError(fmt::format("unknown wtfi seed '{}' (smv|total|pdf)", name));
}

std::string_view to_string(WtfiSeed seed) {
    switch (seed) {
    case WtfiSeed::smv: return "smv";
    case WtfiSeed::total: return "total";
    case WtfiSeed::pdf: return "pdf";
    }
    return "total";
}

} // namespace qsm
