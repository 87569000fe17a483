// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: qsm_acceptance <path-to-qsm-cli> <scratch-dir>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "qsm/bfr.hpp"
#include "qsm/dipole.hpp"
#include "qsm/fourier.hpp"
#include "qsm/inversion.hpp"
#include "qsm/metrics.hpp"
#include "qsm/morphology.hpp"
#include "qsm/phantom.hpp"
#include "qsm/unwrap.hpp"
#include "qsm/wtfi.hpp"

namespace fs = std::filesystem;
using namespace qsm;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, std::string note) {
        pass = pass && ok;
        notes.push_back(fmt::format("{}{}", ok ? "" : "!! ", note));
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double pct(const ScalarVolume& est, const ScalarVolume& ref, const Mask& m) {
    return 100.0 * relative_error(est, ref, m);
}

// Measured values that later criteria freeze (criterion 8).
std::map<std::string, double> g_measured;

Mask radial_region(const Dims& dims, const Spacing& sp, double r_min, double r_max) {
    Mask m(dims);
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const Vec3 p = voxel_position(dims, sp, x, y, z);
                const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                m.set(dims.index(x, y, z), r > r_min && r < r_max);
            }
    return m;
}

Outcome forward_oracle() {
    Outcome out;
    const auto t0 = Clock::now();
    const double a = 8.0;
    const Phantom ph = build_phantom(fixtures::centred_sphere_spec(a, 1.0));
    const auto d = dipole_kernel(fixtures::kGrid64, fixtures::kIso1, fixtures::kAxial);
    const ScalarVolume field = forward_field(ph.chi, d);
    const ScalarVolume exact =
        analytic_sphere_field({0, 0, 0}, a, 1.0, fixtures::kAxial, fixtures::kGrid64,
                              fixtures::kIso1);
    const Mask outside = radial_region(fixtures::kGrid64, fixtures::kIso1, a + 2.0, 1e9);
    const Mask inside = radial_region(fixtures::kGrid64, fixtures::kIso1, -1.0, a - 2.0);
    const double nrmse = pct(field, exact, outside);
    double inside_abs = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i)
        if (inside[i]) inside_abs += std::abs(field[i]);
    inside_abs /= static_cast<double>(inside.count());
    const double secs = seconds_since(t0);
    g_measured["forward_nrmse"] = nrmse;
    out.check(nrmse < 10.0, fmt::format("outside-shell NRMSE {:.2f}% (< 10%)", nrmse));
    out.check(inside_abs < 0.02, fmt::format("inside mean |f| {:.4f} ppm (< 0.02)", inside_abs));
    out.check(secs < 5.0, fmt::format("{:.2f} s (< 5 s)", secs));
    return out;
}

// Largest |fd - analytic| over a block relative to the block's largest |analytic|.
double gradient_mismatch(const std::function<double(double)>& loss_at, double analytic_max,
                         double analytic, double h, double& worst) {
    const double fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
    const double rel = std::abs(fd - analytic) / std::max(analytic_max, 1e-30);
    worst = std::max(worst, rel);
    return rel;
}

double block_max(const ScalarVolume& g) {
    double m = 0.0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
}

Outcome gradient_check() {
    Outcome out;
    const auto t0 = Clock::now();
    const Dims dims{12, 12, 12};
    const Spacing sp = fixtures::kIso1;
    const double h = 1e-5;
    const Mask m2 = sphere_mask(dims, sp, {0, 0, 0}, 5.5);
    const Mask m1 = erode_mask(m2, 1.0, sp);
    const auto kernel = dipole_kernel(dims, sp, normalized({0.1, 0.2, 1.0}));
    const WtfiInputs in = make_wtfi_inputs(
        fixtures::random_volume(dims, sp, 1, -0.1, 0.1), m1, m2,
        fixtures::random_volume(dims, sp, 2, -0.1, 0.1),
        fixtures::random_volume(dims, sp, 3, 0.5, 1.5), kernel, default_phase_scale());
    WtfiState st{apply_mask(fixtures::random_volume(dims, sp, 4, -0.1, 0.1), m1),
                 apply_mask(fixtures::random_volume(dims, sp, 5, -0.1, 0.1), m1),
                 apply_mask(fixtures::random_volume(dims, sp, 6, -0.1, 0.1), m2),
                 apply_mask(fixtures::random_volume(dims, sp, 7, -0.1, 0.1), m2)};
    const LossWeights w{0.7, 1.3, 0.9, 0.05};
    const WtfiState g = loss_gradients(st, in, w);

    const char* names[4] = {"chi1", "fL1", "chi2", "fL2"};
    ScalarVolume WtfiState::*fields[4] = {&WtfiState::chi1, &WtfiState::fl1, &WtfiState::chi2,
                                          &WtfiState::fl2};
    const Mask* masks[4] = {&m1, &m1, &m2, &m2};
    std::vector<std::string> parts;
    double overall = 0.0;
    for (int b = 0; b < 4; ++b) {
        double worst = 0.0;
        const double gmax = block_max(g.*fields[b]);
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (!(*masks[b])[i]) continue;
            gradient_mismatch(
                [&](double delta) {
                    WtfiState p = st;
                    (p.*fields[b])[i] += delta;
                    return wtfi_objective(p, in, w);
                },
                gmax, (g.*fields[b])[i], h, worst);
        }
        overall = std::max(overall, worst);
        parts.push_back(fmt::format("{} {:.1e}", names[b], worst));
    }
    out.check(overall < 1e-4, fmt::format("wTFI max rel err {} (< 1e-4)", fmt::join(parts, ", ")));

    NtvProblem ntv{in.total_field, in.weight, m2, kernel, 0.05, default_phase_scale()};
    const ScalarVolume chi = st.chi2;
    const ScalarVolume gn = ntv.gradient(chi);
    const double gmax = block_max(gn);
    double worst = 0.0;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (!m2[i]) continue;
        gradient_mismatch(
            [&](double delta) {
                ScalarVolume p = chi;
                p[i] += delta;
                return ntv.loss(p);
            },
            gmax, gn[i], h, worst);
    }
    out.check(worst < 1e-4, fmt::format("nonlinear TV max rel err {:.1e} (< 1e-4)", worst));
    const double secs = seconds_since(t0);
    out.check(secs < 60.0, fmt::format("{:.1f} s (< 60 s)", secs));
    return out;
}

Outcome bfr_suppression() {
    Outcome out;
    const auto d = dipole_kernel(fixtures::kGrid64, fixtures::kIso1, fixtures::kAxial);
    const Phantom both = build_phantom(fixtures::bfr_spec(true, true));
    const Mask& m2 = both.brain_mask;
    const ScalarVolume internal = forward_field(both.chi, d);
    const ScalarVolume background = forward_field(both.chi_background, d);
    const ScalarVolume total = internal + background;

    struct Method {
        std::string name;
        std::function<BfrResult(const ScalarVolume&)> run;
        Mask eval;
        double internal_tol, background_tol;
    };
    const Mask erode4 = erode_mask(m2, 4.0, fixtures::kIso1);
    const Mask erode2 = erode_mask(m2, 2.0, fixtures::kIso1);
    const ScalarVolume none;
    std::vector<Method> methods{
        {"resharp", [&](const ScalarVolume& f) { return resharp(f, m2); }, erode4, 15, 5},
        {"sharp", [&](const ScalarVolume& f) { return sharp(f, m2); }, erode4, 15, 10},
        {"pdf", [&](const ScalarVolume& f) { return pdf(f, m2, none); }, erode4, 20, 10},
        {"lbv", [&](const ScalarVolume& f) { return lbv(f, m2); }, erode2, 20, 10},
    };
    for (const auto& m : methods) {
        const auto t0 = Clock::now();
        const BfrResult combined = m.run(total);
        const BfrResult bg_only = m.run(background);
        const ScalarVolume truth = remove_mean(internal, m.eval);
        const double err = pct(remove_mean(combined.local_field, m.eval), truth, m.eval);
        const double baseline = pct(remove_mean(total, m.eval), truth, m.eval);
        const double residual = 100.0 * masked_norm(bg_only.local_field, m.eval) /
                                masked_norm(remove_mean(background, m.eval), m.eval);
        g_measured[m.name + "_internal"] = err;
        g_measured[m.name + "_background"] = residual;
        out.check(err < m.internal_tol,
                  fmt::format("{} internal NRMSE {:.2f}% (< {}%)", m.name, err, m.internal_tol));
        out.check(residual < m.background_tol,
                  fmt::format("{} background residual {:.2f}% (< {}%)", m.name, residual,
                              m.background_tol));
        out.check(baseline >= 2.0 * err,
                  fmt::format("{} beats do-nothing {:.1f}% by {:.1f}x (>= 2x), {:.1f} s", m.name,
                              baseline, baseline / err, seconds_since(t0)));
    }
    return out;
}

Outcome inversion_round_trips() {
    Outcome out;
    const Dims& dims = fixtures::kGrid64;
    const Spacing& sp = fixtures::kIso1;
    const auto d = dipole_kernel(dims, sp, fixtures::kAxial);

    {
        // chi* with no spectral content where |D| < t.
        const double t = 0.2;
        SpectralVolume spec = fourier_forward(fixtures::random_volume(dims, sp, 11));
        for (std::size_t i = 0; i < spec.size(); ++i)
            if (std::abs(d[i]) < t) spec[i] = 0.0;
        const ScalarVolume chi = fourier_inverse(spec, Unit::ppm);
        const ScalarVolume rec = tkd(forward_field(chi, d), d, t);
        const double err = relative_error(rec, chi, Mask(dims, true));
        out.check(err < 1e-10, fmt::format("TKD band-limited recovery {:.1e} (< 1e-10)", err));
    }
    {
        const Phantom ph = build_phantom(fixtures::bfr_spec(true, false));
        const std::vector<Vec3> dirs{fixtures::kAxial, tilt(fixtures::kAxial, 0, 15.0),
                                     tilt(fixtures::kAxial, 0, -15.0),
                                     tilt(fixtures::kAxial, 1, 15.0),
                                     tilt(fixtures::kAxial, 1, -15.0)};
        std::vector<ScalarVolume> fields;
        for (const auto& b : dirs)
            fields.push_back(forward_field(ph.chi, dipole_kernel(dims, sp, b)));
        const double err = pct(cosmos(fields, dirs), ph.chi, ph.brain_mask);
        const double tkd_err = pct(tkd(fields.front(), d), ph.chi, ph.brain_mask);
        g_measured["cosmos_sphere"] = err;
        g_measured["tkd_sphere"] = tkd_err;
        out.check(err < 5.0, fmt::format("COSMOS 5 orientations {:.2f}% (< 5%)", err));
        out.check(tkd_err < 35.0, fmt::format("TKD sphere t=0.2 {:.2f}% (< 35%)", tkd_err));
    }
    {
        const auto t0 = Clock::now();
        PhantomSpec spec = fixtures::bfr_spec(true, false);
        spec.spheres.front().delta_chi = 0.1; // keeps s * field well inside (-pi, pi]
        const Phantom ph = build_phantom(spec);
        const ScalarVolume f = forward_field(ph.chi, d);
        AcquisitionMeta meta;
        meta.echo_times_s = {0.020};
        const ScalarVolume ones(dims, sp, std::vector<double>(dims.size(), 1.0));
        // SNR 50: unit magnitude, noise sd 0.02 per channel.
        const EchoSeries echoes = synthesize_echoes(f, meta, ones, 1.0 / 50.0, 2024);
        const double s = meta.radians_per_ppm(0.020);
        const ScalarVolume noisy =
            apply_mask((1.0 / s) * echoes.wrapped_phases.front(), ph.brain_mask);
        const double tkd_err = pct(tkd(noisy, d), ph.chi, ph.brain_mask);
        NtvOptions opt;
        opt.phase_scale = s;
        const auto ntv = nonlinear_tv_invert(noisy, echoes.magnitudes.front(), ph.brain_mask, d, opt);
        const double ntv_err = pct(ntv.chi, ph.chi, ph.brain_mask);
        g_measured["noisy_tkd"] = tkd_err;
        g_measured["noisy_ntv"] = ntv_err;
        out.check(ntv_err < tkd_err,
                  fmt::format("SNR 50: nonlinear TV {:.2f}% < TKD {:.2f}%, {:.1f} s", ntv_err,
                              tkd_err, seconds_since(t0)));
    }
    return out;
}

Outcome wtfi_solver() {
    Outcome out;
    const auto t0 = Clock::now();
    const Dims& dims = fixtures::kGrid64;
    const Spacing& sp = fixtures::kIso1;
    const auto d = dipole_kernel(dims, sp, fixtures::kAxial);
    const Phantom ph = build_phantom(fixtures::wtfi_spec());
    const Mask& m2 = ph.brain_mask;
    const Mask m1 = erode_mask(m2, 4.0, sp);
    const Mask shell = m2 - m1;
    const ScalarVolume local = forward_field(ph.chi, d);
    const ScalarVolume supervision = apply_mask(local, m1);

    const WtfiInputs in = make_wtfi_inputs(local, m1, m2, supervision, ScalarVolume{}, d,
                                           default_phase_scale());
    WtfiOptions opt;
    opt.iterations = 500;
    const WtfiResult res = wtfi_solve(in, LossWeights{}, opt);
    const double secs = seconds_since(t0);

    const double tkd_m1 = pct(tkd(supervision, d), ph.chi, m1);
    const double chi2_m1 = pct(res.state.chi2, ph.chi, m1);
    const double chi2_shell = pct(res.state.chi2, ph.chi, shell);
    const double zero_fill = pct(ScalarVolume(dims, sp), ph.chi, shell);
    bool monotone = true;
    for (std::size_t k = 1; k < res.loss_trace.size(); ++k)
        monotone = monotone && res.loss_trace[k] <= res.loss_trace[k - 1];
    g_measured["wtfi_chi2_m1"] = chi2_m1;
    g_measured["wtfi_chi2_shell"] = chi2_shell;

    out.check(chi2_m1 <= tkd_m1,
              fmt::format("chi2 on m1 {:.2f}% <= TKD {:.2f}%", chi2_m1, tkd_m1));
    out.check(chi2_shell < 60.0 && chi2_shell < zero_fill,
              fmt::format("chi2 on m2\\m1 {:.2f}% (< 60%, zero-fill {:.0f}%)", chi2_shell,
                          zero_fill));
    out.check(monotone, fmt::format("loss trace monotone over {} iterations ({:.4g} -> {:.4g})",
                                    res.loss_trace.size() - 1, res.loss_trace.front(),
                                    res.loss_trace.back()));
    out.check(secs < 300.0, fmt::format("{:.1f} s (< 300 s)", secs));
    return out;
}

Outcome unwrap_round_trip() {
    Outcome out;
    const Dims& dims = fixtures::kGrid64;
    const Spacing& sp = fixtures::kIso1;
    // Smooth bump of 0.3 ppm: 7.5 rad at the last echo.
    ScalarVolume field(dims, sp, Unit::ppm);
    for (std::size_t z = 0; z < dims.nz; ++z)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const Vec3 p = voxel_position(dims, sp, x, y, z);
                const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                field[dims.index(x, y, z)] = 0.3 * std::exp(-r2 / (2.0 * 10.0 * 10.0));
            }
    AcquisitionMeta meta;
    meta.echo_times_s = {0.0104, 0.0174, 0.0244, 0.0314};
    const ScalarVolume ones(dims, sp, std::vector<double>(dims.size(), 1.0));
    const EchoSeries echoes = synthesize_echoes(field, meta, ones, 0.0, 7);
    double max_phase = 0.0;
    for (double v : field.values())
        max_phase = std::max(max_phase, v * meta.radians_per_ppm(meta.echo_times_s.back()));

    std::vector<ScalarVolume> unwrapped;
    for (const auto& w : echoes.wrapped_phases) unwrapped.push_back(laplacian_unwrap(w));
    const FieldFit fit = fit_field(unwrapped, meta, magnitude_weights(echoes.magnitudes));
    const Mask central = radial_region(dims, sp, -1.0, 20.0);
    const double err = pct(fit.field, field, central);
    g_measured["unwrap_fit"] = err;
    out.check(max_phase > std::numbers::pi,
              fmt::format("peak phase {:.2f} rad forces wraps", max_phase));
    out.check(err < 2.0, fmt::format("field NRMSE {:.3f}% in central 20 mm (< 2%)", err));
    return out;
}

Outcome metric_identities() {
    Outcome out;
    const Dims dims{32, 32, 32};
    const Spacing sp = fixtures::kIso1;
    const Mask mask = sphere_mask(dims, sp, {0, 0, 0}, 14.0);
    const Phantom ph = build_phantom([&] {
        PhantomSpec s;
        s.dims = dims;
        s.spacing = sp;
        s.brain_mask_radius_mm = 14.0;
        s.spheres = {{{0, 0, 0}, 6.0, 1.0}, {{5, 5, 0}, 3.0, -0.5}};
        return s;
    }());
    ScalarVolume ref = ph.chi;
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += 0.2;

    const MetricReport same = evaluate_metrics(ref, ref, mask);
    out.check(same.nrmse_pct == 0.0 && same.hfen_pct == 0.0 && std::abs(same.ssim - 1.0) < 1e-12 &&
                  std::isinf(same.psnr_db),
              fmt::format("pred = ref: NRMSE {} HFEN {} SSIM {:.12f} pSNR {} (shown {})",
                          same.nrmse_pct, same.hfen_pct, same.ssim, same.psnr_db,
                          std::min(same.psnr_db, kPsnrDisplayCap)));
    const MetricReport twice = evaluate_metrics(2.0 * ref, ref, mask);
    out.check(std::abs(twice.nrmse_pct - 100.0) < 1e-12,
              fmt::format("pred = 2 ref: NRMSE {:.12f}%", twice.nrmse_pct));

    const double sigma = 0.05;
    const Dims big{64, 64, 64};
    const Mask big_mask(big, true);
    ScalarVolume big_ref = fixtures::random_volume(big, sp, 3, -1.0, 1.0);
    ScalarVolume noisy = big_ref;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0.0, sigma);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += n(rng);
    const MetricReport noise = evaluate_metrics(noisy, big_ref, big_mask);
    const double rmse = masked_norm(noisy - big_ref, big_mask) / std::sqrt(big.size());
    double peak = 0.0;
    for (double v : big_ref.values()) peak = std::max(peak, std::abs(v));
    const double expected_psnr = 20.0 * std::log10(peak / sigma);
    out.check(std::abs(rmse - sigma) < 0.05 * sigma &&
                  std::abs(noise.psnr_db - expected_psnr) < 0.5,
              fmt::format("noise sd {}: RMSE {:.5f}, pSNR {:.3f} dB vs {:.3f} dB", sigma, rmse,
                          noise.psnr_db, expected_psnr));
    const std::string header = metrics_csv_header();
    out.check(header == "method,pSNR (dB),NRMSE (%),HFEN (%),SSIM (0-1)",
              fmt::format("CSV header '{}'", header));
    return out;
}

// Values measured by criteria 1-6 on their fixed phantoms and seeds, frozen
// here. Any drift beyond 2 percentage points fails.
const std::map<std::string, double> kFrozen = {
    {"forward_nrmse", 9.31},    {"resharp_internal", 12.64}, {"resharp_background", 0.70},
    {"sharp_internal", 7.28},   {"sharp_background", 0.74}, {"pdf_internal", 9.60},
    {"pdf_background", 0.20},   {"lbv_internal", 4.85},     {"lbv_background", 2.36},
    {"cosmos_sphere", 2.00},    {"tkd_sphere", 32.73},       {"noisy_tkd", 104.87},
    {"noisy_ntv", 29.24},        {"wtfi_chi2_m1", 43.83},     {"wtfi_chi2_shell", 57.98},
    {"unwrap_fit", 0.00},
};

Outcome regression_values() {
    Outcome out;
    out.notes.push_back(
        "published in-vivo table and figures are out of reach; frozen phantom values stand in");
    for (const auto& [key, frozen] : kFrozen) {
        const auto it = g_measured.find(key);
        if (it == g_measured.end()) {
            out.check(false, fmt::format("{} not measured", key));
            continue;
        }
        out.check(std::abs(it->second - frozen) <= 2.0,
                  fmt::format("{} {:.2f}% (frozen {:.2f}% +/- 2)", key, it->second, frozen));
    }
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const std::string& cli, const fs::path& scratch) {
    Outcome out;
    if (cli.empty()) {
        out.check(false, "no CLI path given");
        return out;
    }
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    const fs::path config = scratch / "config.json";
    std::ofstream(config) << R"({
  "rng_seed": 5,
  "stages": ["phantom", "forward", "echoes", "unwrap", "fit-field", "resharp", "tkd", "wtfi", "metrics"],
  "phantom": {"dims": [32, 32, 32], "voxel_size": [1, 1, 1], "brain_mask_radius_mm": 14,
              "spheres": [{"center_mm": [0, 0, 0], "radius_mm": 3, "delta_chi": 0.1}],
              "background_sources": [{"center_mm": [0, 12, -12], "radius_mm": 2, "delta_chi": 9}]},
  "echoes": {"noise_sd": 0.01},
  "wtfi": {"iterations": 20}
})";
    std::vector<std::map<std::string, std::string>> runs;
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = scratch / fmt::format("run{}", run);
        const std::string cmd = fmt::format("\"{}\" pipeline --config \"{}\" --output-dir \"{}\" > \"{}\" 2>&1",
                                            cli, config.string(), dir.string(),
                                            (scratch / fmt::format("log{}.txt", run)).string());
        const int rc = std::system(cmd.c_str());
        out.check(rc == 0, fmt::format("run {} exit status {}", run + 1, rc));
        std::map<std::string, std::string> files;
        if (fs::exists(dir))
            for (const auto& e : fs::recursive_directory_iterator(dir)) {
                if (!e.is_regular_file()) continue;
                std::string body = slurp(e.path());
                if (e.path().extension() == ".json") {
                    // Sidecar timestamps are the one permitted difference.
                    const auto pos = body.find("\"timestamp\"");
                    if (pos != std::string::npos) body.erase(pos, body.find('\n', pos) - pos);
                }
                files[fs::relative(e.path(), dir).string()] = std::move(body);
            }
        runs.push_back(std::move(files));
    }
    const bool same = runs[0] == runs[1] && !runs[0].empty();
    out.check(same, fmt::format("{} output files byte-identical across reruns", runs[0].size()));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const fs::path scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "qsm_acceptance";

    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "forward model vs analytic sphere", forward_oracle},
        {2, "gradient check", gradient_check},
        {3, "background field removal", bfr_suppression},
        {4, "inversion round trips", inversion_round_trips},
        {5, "wTFI solver", wtfi_solver},
        {6, "unwrap and field fit", unwrap_round_trip},
        {7, "metric identities", metric_identities},
        {8, "frozen regression values", regression_values},
        {9, "pipeline determinism", [&] { return determinism(cli, scratch); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, fmt::format("exception: {}", e.what()));
        }
        failures += o.pass ? 0 : 1;
        std::cout << fmt::format("criterion {} {}: {} | {}\n", c.id, o.pass ? "PASS" : "FAIL",
                                 c.title, fmt::join(o.notes, "; "))
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures,
                             criteria.size());
    return failures == 0 ? 0 : 1;
}
