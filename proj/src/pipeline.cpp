#include "qsm/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>

#include <fmt/format.h>

#include "qsm/dipole.hpp"
#include "qsm/error.hpp"
#include "qsm/metrics.hpp"
#include "qsm/morphology.hpp"
#include "qsm/nifti.hpp"
#include "qsm/png_slice.hpp"
#include "qsm/provenance.hpp"

namespace qsm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Everything the stages hand to each other, plus where each artifact lives on
// disk so sidecars can hash their inputs.
struct Board {
    std::map<std::string, ScalarVolume> volumes;
    std::map<std::string, std::vector<ScalarVolume>> series;
    std::map<std::string, Mask> masks;
    std::map<std::string, std::vector<fs::path>> files;
};

class Run {
public:
    Run(const RunConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

    PipelineResult execute() {
        fs::create_directories(dir_);
        load_inputs();
        for (const auto& stage : cfg_.stages) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                dispatch(stage);
            } catch (const NumericalError& e) {
                throw NumericalError(fmt::format("stage '{}': {}", stage, e.what()));
            } catch (const ValidationError& e) {
                throw ValidationError(fmt::format("stage '{}': {}", stage, e.what()));
            }
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            std::cerr << fmt::format("[{}] done in {:.2f} s\n", stage, dt.count());
        }
        return {dir_, written_};
    }

private:
    const RunConfig& cfg_;
    fs::path dir_;
    Board board_;
    std::vector<fs::path> written_;

    void load_inputs() {
        for (const auto& [name, paths] : cfg_.inputs) {
            require(!paths.empty(), fmt::format("input '{}' lists no files", name));
            if (name == "mask" || name == "local_mask") {
                require(paths.size() == 1, fmt::format("input '{}' takes one file", name));
                board_.masks.insert_or_assign(name, read_mask(paths.front()));
            } else if (name == "echo_phase" || name == "echo_magnitude" || name == "unwrapped") {
                std::vector<ScalarVolume> vs;
                for (const auto& p : paths) vs.push_back(read_volume(p));
                board_.series[name] = std::move(vs);
            } else {
                require(paths.size() == 1, fmt::format("input '{}' takes one file", name));
                board_.volumes.insert_or_assign(name, read_volume(paths.front()));
            }
            board_.files[name] = {paths.begin(), paths.end()};
        }
    }

    [[nodiscard]] bool has(const std::string& name) const {
        return board_.volumes.count(name) || board_.series.count(name) || board_.masks.count(name);
    }

    const ScalarVolume& vol(const std::string& name) const {
        const auto it = board_.volumes.find(name);
        require(it != board_.volumes.end(), fmt::format("missing artifact '{}'", name));
        return it->second;
    }

    const Mask& mask(const std::string& name) const {
        const auto it = board_.masks.find(name);
        require(it != board_.masks.end(), fmt::format("missing artifact '{}'", name));
        return it->second;
    }

    const std::vector<ScalarVolume>& series(const std::string& name) const {
        const auto it = board_.series.find(name);
        require(it != board_.series.end(), fmt::format("missing artifact '{}'", name));
        return it->second;
    }

    std::vector<ProvenanceInput> provenance(std::initializer_list<std::string> names) const {
        std::vector<ProvenanceInput> out;
        for (const auto& n : names) {
            const auto it = board_.files.find(n);
            if (it == board_.files.end()) continue;
            for (const auto& p : it->second) out.push_back({n, p});
        }
        return out;
    }

    fs::path target(const std::string& stem, const char* ext = ".nii") const {
        const auto it = cfg_.outputs.find(stem);
        return dir_ / (it != cfg_.outputs.end() ? it->second : stem + ext);
    }

    // NIfTI has no slot for the field direction or echo times, so every
    // sidecar carries them.
    json with_acquisition(json extra) const {
        const auto& a = cfg_.acquisition;
        extra["acquisition"] = {{"b0_tesla", a.b0_tesla}, {"b0_dir", vec_json(a.b0_dir)},
                                {"echo_times_ms", a.echo_times_ms},
                                {"effective_te_ms", a.effective_te_ms}};
        return extra;
    }

    fs::path emit(const std::string& artifact, const std::string& stem, const ScalarVolume& v,
                  const std::string& stage, const json& params,
                  const std::vector<ProvenanceInput>& inputs, const json& extra = json::object()) {
        const fs::path p = target(stem);
        write_volume(v, p);
        write_sidecar(p, stage, params, inputs, with_acquisition(extra));
        if (cfg_.dump_slice) {
            const fs::path png = dir_ / fmt::format("{}_z{}.png", stem, *cfg_.dump_slice);
            write_slice_png(v, *cfg_.dump_slice, png);
        }
        board_.files[artifact].push_back(p);
        written_.push_back(p);
        return p;
    }

    void emit_mask(const std::string& artifact, const std::string& stem, const Mask& m,
                   const Spacing& sp, const std::string& stage, const json& params,
                   const std::vector<ProvenanceInput>& inputs) {
        const fs::path p = target(stem);
        write_mask(m, sp, p);
        write_sidecar(p, stage, params, inputs, with_acquisition(json::object()));
        board_.files[artifact].push_back(p);
        written_.push_back(p);
    }

    void put(const std::string& name, ScalarVolume v) {
        board_.files.erase(name);
        board_.volumes.insert_or_assign(name, std::move(v));
    }
    void put(const std::string& name, Mask m) {
        board_.files.erase(name);
        board_.masks.insert_or_assign(name, std::move(m));
    }
    void put(const std::string& name, std::vector<ScalarVolume> vs) {
        board_.files.erase(name);
        board_.series[name] = std::move(vs);
    }

    // The local field if a BFR stage ran or one was supplied, else the field.
    [[nodiscard]] std::string field_source() const {
        return has("local_field") ? "local_field" : "field";
    }
    [[nodiscard]] std::string region_source() const {
        return has("local_mask") ? "local_mask" : "mask";
    }

    // Explicit weight file, else the mean echo magnitude, else uniform (empty).
    ScalarVolume data_weight() const {
        if (has("weight")) return vol("weight");
        if (!has("echo_magnitude")) return {};
        const auto& mags = series("echo_magnitude");
        ScalarVolume w = mags.front();
        for (std::size_t e = 1; e < mags.size(); ++e) w = w + mags[e];
        return (1.0 / static_cast<double>(mags.size())) * w;
    }

    [[nodiscard]] const char* weight_source() const {
        return has("weight") ? "weight" : "echo_magnitude";
    }

    DipoleKernel kernel_for(const ScalarVolume& v) const {
        return dipole_kernel(v.dims(), v.spacing(), cfg_.acquisition.b0_dir);
    }

    static json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

    void dispatch(const std::string& stage) {
        if (stage == "phantom") return phantom();
        if (stage == "forward") return forward();
        if (stage == "echoes") return echoes();
        if (stage == "unwrap") return unwrap();
        if (stage == "fit-field") return fit();
        if (stage == "sharp" || stage == "resharp" || stage == "pdf" || stage == "lbv")
            return background(stage);
        if (stage == "tkd") return run_tkd();
        if (stage == "ntv") return run_ntv();
        if (stage == "cosmos") return run_cosmos();
        if (stage == "wtfi") return run_wtfi();
        if (stage == "metrics") return metrics();
        throw ValidationError(fmt::format("unknown stage '{}'", stage));
    }

    void phantom() {
        Phantom ph = build_phantom(cfg_.phantom);
        const json params = cfg_.source.value("phantom", json::object());
        const json extra{{"rng_seed", cfg_.rng_seed}};
        put("chi", ph.chi);
        put("chi_background", ph.chi_background);
        put("mask", ph.brain_mask);
        emit("chi", "chi", ph.chi, "phantom", params, {}, extra);
        emit("chi_background", "chi_background", ph.chi_background, "phantom", params, {}, extra);
        emit_mask("mask", "mask", ph.brain_mask, ph.chi.spacing(), "phantom", params, {});
    }

    void forward() {
        const ScalarVolume& chi = vol("chi");
        ScalarVolume total = has("chi_background") ? chi + vol("chi_background") : chi;
        ScalarVolume field = cfg_.forward_padded
                                 ? forward_field_padded(total, cfg_.acquisition.b0_dir)
                                 : forward_field(total, kernel_for(total));
        const json params{{"padded", cfg_.forward_padded},
                          {"b0_dir", vec_json(cfg_.acquisition.b0_dir)}};
        put("field", field);
        emit("field", "field", field, "forward", params, provenance({"chi", "chi_background"}));
    }

    void echoes() {
        const ScalarVolume& field = vol("field");
        // Signal only where there is tissue when a brain mask is known.
        ScalarVolume magnitude = has("mask")
                                     ? to_volume(mask("mask"), field.spacing())
                                     : ScalarVolume(field.dims(), field.spacing(),
                                                    std::vector<double>(field.size(), 1.0));
        const AcquisitionMeta meta = cfg_.acquisition.meta(field.spacing());
        EchoSeries s = synthesize_echoes(field, meta, magnitude, cfg_.echo_noise_sd, cfg_.rng_seed);
        const json params{{"noise_sd", cfg_.echo_noise_sd},
                          {"echo_times_ms", cfg_.acquisition.echo_times_ms},
                          {"b0_tesla", cfg_.acquisition.b0_tesla},
                          {"rng_seed", cfg_.rng_seed}};
        const auto inputs = provenance({"field", "mask"});
        put("echo_phase", s.wrapped_phases);
        put("echo_magnitude", s.magnitudes);
        for (std::size_t e = 0; e < s.wrapped_phases.size(); ++e) {
            emit("echo_phase", fmt::format("echo{}_phase", e + 1),
                 s.wrapped_phases[e].with_unit(Unit::radians), "echoes", params, inputs);
            emit("echo_magnitude", fmt::format("echo{}_magnitude", e + 1), s.magnitudes[e],
                 "echoes", params, inputs);
        }
    }

    void unwrap() {
        const auto& phases = series("echo_phase");
        std::vector<ScalarVolume> out;
        for (const auto& ph : phases)
            out.push_back(has("mask") ? laplacian_unwrap(ph, mask("mask")) : laplacian_unwrap(ph));
        const auto inputs = provenance({"echo_phase", "mask"});
        put("unwrapped", out);
        for (std::size_t e = 0; e < out.size(); ++e)
            emit("unwrapped", fmt::format("echo{}_unwrapped", e + 1), out[e], "unwrap",
                 json{{"method", "laplacian"}}, inputs);
    }

    void fit() {
        const auto& unwrapped = series("unwrapped");
        require(!unwrapped.empty(), "no unwrapped echoes");
        require(unwrapped.size() == cfg_.acquisition.echo_times_ms.size(),
                fmt::format("{} unwrapped echoes but {} echo times", unwrapped.size(),
                            cfg_.acquisition.echo_times_ms.size()));
        std::vector<ScalarVolume> weights;
        if (has("echo_magnitude")) weights = magnitude_weights(series("echo_magnitude"));
        FieldFit f = fit_field(unwrapped, cfg_.acquisition.meta(unwrapped.front().spacing()),
                               weights, cfg_.fit);
        const json params{{"with_offset", cfg_.fit.with_offset},
                          {"echo_times_ms", cfg_.acquisition.echo_times_ms},
                          {"weighted", !weights.empty()}};
        const auto inputs = provenance({"unwrapped", "echo_magnitude"});
        const Spacing sp = f.field.spacing();
        put("field", f.field);
        put("field_valid", f.valid);
        emit("field", "field_fit", board_.volumes.at("field"), "fit-field", params, inputs);
        emit_mask("field_valid", "field_valid", board_.masks.at("field_valid"), sp, "fit-field",
                  params, inputs);
    }

    void background(const std::string& method) {
        const ScalarVolume& field = vol("field");
        const Mask& m2 = mask("mask");
        BfrResult r;
        json params;
        if (method == "sharp") {
            r = sharp(field, m2, cfg_.sharp);
            params = {{"radius_mm", cfg_.sharp.radius_mm}, {"threshold", cfg_.sharp.threshold}};
        } else if (method == "resharp") {
            r = resharp(field, m2, cfg_.resharp);
            params = {{"radius_mm", cfg_.resharp.radius_mm}, {"lambda", cfg_.resharp.lambda},
                      {"cg_tol", cfg_.resharp.cg_tol}, {"cg_max_iter", cfg_.resharp.cg_max_iter}};
        } else if (method == "pdf") {
            PdfOptions opt = cfg_.pdf;
            opt.b0_dir = cfg_.acquisition.b0_dir;
            r = pdf(field, m2, has("weight") ? vol("weight") : ScalarVolume{}, opt);
            params = {{"cg_tol", opt.cg_tol}, {"cg_max_iter", opt.cg_max_iter}};
        } else {
            r = lbv(field, m2, cfg_.lbv);
            params = {{"cg_tol", cfg_.lbv.cg_tol}, {"cg_max_iter", cfg_.lbv.cg_max_iter}};
        }
        params["method"] = method;
        const json extra{{"iterations_used", r.iterations_used},
                         {"residual_norm", r.residual_norm},
                         {"converged", r.converged}};
        if (!r.converged)
            std::cerr << fmt::format("[{}] warning: CG stopped at residual {:.2e} after {} iterations\n",
                                     method, r.residual_norm, r.iterations_used);
        const auto inputs = provenance({"field", "mask", "weight"});
        const Spacing sp = r.local_field.spacing();
        put("local_field", r.local_field);
        put("local_mask", r.mask_out);
        emit("local_field", "local_field_" + method, board_.volumes.at("local_field"), method,
             params, inputs, extra);
        emit_mask("local_mask", "local_mask_" + method, board_.masks.at("local_mask"), sp, method,
                  params, inputs);
    }

    void run_tkd() {
        const std::string src = field_source();
        const ScalarVolume& f = vol(src);
        ScalarVolume chi = apply_mask(tkd(f, kernel_for(f), cfg_.tkd_threshold), mask(region_source()));
        const auto inputs = provenance({src, region_source()});
        put("chi_tkd", chi);
        emit("chi_tkd", "chi_tkd", board_.volumes.at("chi_tkd"), "tkd",
             json{{"threshold", cfg_.tkd_threshold}}, inputs);
    }

    void run_ntv() {
        const std::string src = field_source();
        const ScalarVolume& f = vol(src);
        NtvOptions opt = cfg_.ntv;
        opt.phase_scale = cfg_.acquisition.phase_scale();
        InversionResult r = nonlinear_tv_invert(f, data_weight(),
                                                mask(region_source()), kernel_for(f), opt);
        const json params{{"lambda_tv", opt.lambda_tv}, {"iterations", opt.iterations},
                          {"phase_scale", opt.phase_scale}};
        const auto inputs = provenance({src, region_source(), weight_source()});
        put("chi_ntv", r.chi);
        emit("chi_ntv", "chi_ntv", board_.volumes.at("chi_ntv"), "ntv", params, inputs,
             json{{"final_loss", r.loss_trace.empty() ? 0.0 : r.loss_trace.back()}});
    }

    // Simulated multi-orientation acquisition of the known chi: the axial
    // direction plus four tilts about x and y.
    void run_cosmos() {
        const ScalarVolume& chi = vol("chi");
        const Vec3 b = cfg_.acquisition.b0_dir;
        const double t = cfg_.cosmos.tilt_deg;
        const std::vector<Vec3> dirs{b, tilt(b, 0, t), tilt(b, 0, -t), tilt(b, 1, t), tilt(b, 1, -t)};
        std::mt19937_64 rng(cfg_.rng_seed ^ 0xC05A05ULL);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<ScalarVolume> fields;
        for (const auto& d : dirs) {
            ScalarVolume f = forward_field(chi, dipole_kernel(chi.dims(), chi.spacing(), d));
            if (cfg_.cosmos.noise_sd > 0)
                for (std::size_t i = 0; i < f.size(); ++i) f[i] += cfg_.cosmos.noise_sd * noise(rng);
            fields.push_back(std::move(f));
        }
        ScalarVolume out = cosmos(fields, dirs, cfg_.cosmos.epsilon);
        if (has("mask")) out = apply_mask(out, mask("mask"));
        json jdirs = json::array();
        for (const auto& d : dirs) jdirs.push_back(vec_json(d));
        const json params{{"tilt_deg", t}, {"epsilon", cfg_.cosmos.epsilon},
                          {"noise_sd", cfg_.cosmos.noise_sd}, {"b0_dirs", jdirs},
                          {"rng_seed", cfg_.rng_seed}};
        put("chi_cosmos", out);
        emit("chi_cosmos", "chi_cosmos", board_.volumes.at("chi_cosmos"), "cosmos", params,
             provenance({"chi", "mask"}));
    }

    void run_wtfi() {
        const ScalarVolume& total = vol("field");
        const Mask& m2 = mask("mask");
        const Mask m1 = has("local_mask") ? mask("local_mask") & m2
                                          : erode_mask(m2, cfg_.wtfi.erosion_radius_mm, total.spacing());
        const ScalarVolume& supervision = vol("local_field");
        WtfiInputs in = make_wtfi_inputs(total, m1, m2, supervision, data_weight(), kernel_for(total),
                                         cfg_.acquisition.phase_scale());
        const WtfiResult r = wtfi_solve(in, cfg_.wtfi.weights, cfg_.wtfi.options);
        const LossBreakdown lb = evaluate_losses(r.state, in, cfg_.wtfi.weights);

        const auto& w = cfg_.wtfi.weights;
        const auto& o = cfg_.wtfi.options;
        const json params{{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"lambda3", w.lambda3},
                          {"lambda4", w.lambda4}, {"iterations", o.iterations},
                          {"seed", std::string(to_string(o.seed))},
                          {"initial_step", o.step.initial_step},
                          {"step_scales", o.step.scales},
                          {"phase_scale", in.phase_scale}};
        const json extra{{"stalled", r.stalled},
                         {"losses", {{"chi1", lb.l_chi1}, {"fl1", lb.l_fl1},
                                     {"consistency", lb.l_consistency},
                                     {"chi_consistency", lb.l_chi_consistency},
                                     {"tv", lb.l_tv}, {"total", lb.l_total}}}};
        const auto inputs =
            provenance({"field", "mask", "local_mask", "local_field", weight_source()});
        put("chi_wtfi", r.state.chi2);
        emit("chi_wtfi", "chi_wtfi", board_.volumes.at("chi_wtfi"), "wtfi", params, inputs, extra);
        emit("fl_wtfi", "local_field_wtfi", r.state.fl2, "wtfi", params, inputs, extra);
        emit("chi1_wtfi", "chi1_wtfi", r.state.chi1, "wtfi", params, inputs, extra);

        const fs::path csv = target("wtfi_loss", ".csv");
        {
            std::ofstream out(csv);
            out << "iteration,objective\n";
            for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
                out << fmt::format("{},{:.12e}\n", i, r.loss_trace[i]);
        }
        write_sidecar(csv, "wtfi", params, inputs);
        written_.push_back(csv);
    }

    void metrics() {
        const ScalarVolume& ref = vol("chi");
        const std::string region = cfg_.metrics_region == "local" && has("local_mask")
                                       ? "local_mask" : "mask";
        const Mask& m = mask(region);
        const fs::path csv = target("metrics", ".csv");
        std::vector<ProvenanceInput> inputs = provenance({"chi", region});
        {
            std::ofstream out(csv);
            out << metrics_csv_header() << '\n';
            for (const char* method : {"chi_tkd", "chi_ntv", "chi_cosmos", "chi_wtfi", "estimate"}) {
                if (!has(method)) continue;
                const MetricReport r = evaluate_metrics(vol(method), ref, m);
                std::string name = method;
                if (name.rfind("chi_", 0) == 0) name = name.substr(4);
                out << metrics_csv_row(name, r) << '\n';
                for (auto& p : provenance({method})) inputs.push_back(std::move(p));
            }
        }
        write_sidecar(csv, "metrics", json{{"region", region}}, inputs);
        written_.push_back(csv);
    }
};

} // namespace

PipelineResult run_pipeline(const RunConfig& cfg, const fs::path& output_dir) {
    fs::path dir = output_dir;
    if (dir.empty()) dir = cfg.output_dir;
    if (dir.empty()) dir = fs::path("qsm_runs") / config_hash(cfg);
    return Run(cfg, dir).execute();
}

} // namespace qsm
