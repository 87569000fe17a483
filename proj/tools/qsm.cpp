// Command-line front end. Every subcommand is a one-stage pipeline run, so
// flags and config files go through the same validation.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qsm/config.hpp"
#include "qsm/error.hpp"
#include "qsm/pipeline.hpp"
#include "qsm/threads.hpp"

namespace {

using nlohmann::json;

std::vector<double> split_numbers(const std::string& s, std::size_t expected, const char* what) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw qsm::ValidationError(fmt::format("{}: '{}' is not a number", what, tok));
        }
    }
    if (out.size() != expected)
        throw qsm::ValidationError(fmt::format("{} needs {} comma-separated numbers, got '{}'",
                                               what, expected, s));
    return out;
}

json sphere_json(const std::string& s, const char* what) {
    const auto v = split_numbers(s, 5, what);
    return {{"center_mm", {v[0], v[1], v[2]}}, {"radius_mm", v[3]}, {"delta_chi", v[4]}};
}

std::size_t parse_slice(const std::string& s) {
    if (s.rfind("z=", 0) != 0)
        throw qsm::ValidationError(fmt::format("--dump-slice expects z=K, got '{}'", s));
    try {
        return std::stoul(s.substr(2));
    } catch (const std::exception&) {
        throw qsm::ValidationError(fmt::format("--dump-slice expects z=K, got '{}'", s));
    }
}

// Flags shared by every subcommand plus the JSON document they fill in.
struct Invocation {
    json doc = json::object();
    std::string output_dir = ".";
    std::string dump_slice;
    std::uint64_t seed = 0;
    std::string b0_dir;
    std::vector<double> te_ms;
    std::string config_path;
};

void common(CLI::App* sub, Invocation& inv) {
    sub->add_option("-o,--output-dir", inv.output_dir, "Directory for outputs and sidecars");
    sub->add_option("--seed", inv.seed, "RNG seed");
    sub->add_option("--dump-slice", inv.dump_slice, "Also write a PNG of axial slice z=K");
    sub->add_option("--b0-dir", inv.b0_dir, "Field direction x,y,z");
    sub->add_option("--te", inv.te_ms, "Echo times in ms")->delimiter(',');
}

void input(json& doc, const char* artifact, const std::vector<std::string>& paths) {
    if (!paths.empty()) doc["inputs"][artifact] = paths;
}
void input(json& doc, const char* artifact, const std::string& path) {
    if (!path.empty()) doc["inputs"][artifact] = path;
}
void output(json& doc, const char* stem, const std::string& path) {
    if (!path.empty()) doc["outputs"][stem] = path;
}

} // namespace

int main(int argc, char** argv) {
    qsm::configure_threads_from_env();

    CLI::App app{"Quantitative susceptibility mapping toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", QSM_VERSION);
    Invocation inv;

    // phantom
    std::vector<std::size_t> dims{64, 64, 64};
    std::vector<double> voxel{1, 1, 1};
    double brain_radius = 28.0, texture_sd = 0.0;
    std::vector<std::string> spheres, backgrounds;
    auto* ph = app.add_subcommand("phantom", "Build a numerical susceptibility phantom");
    common(ph, inv);
    ph->add_option("--dims", dims, "Grid size nx,ny,nz")->delimiter(',')->expected(3);
    ph->add_option("--voxel-size", voxel, "Voxel size in mm")->delimiter(',')->expected(3);
    ph->add_option("--brain-radius", brain_radius, "Brain mask radius in mm");
    ph->add_option("--sphere", spheres, "Internal source x,y,z,radius,delta_chi (mm, ppm)");
    ph->add_option("--background", backgrounds, "External source x,y,z,radius,delta_chi");
    ph->add_option("--texture-sd", texture_sd, "Gaussian texture inside the brain, ppm");

    // forward
    std::string chi, chi_bg, mask, field, local_field, local_mask, weight, estimate, out;
    bool padded = false;
    auto* fw = app.add_subcommand("forward", "Dipole forward model chi -> field");
    common(fw, inv);
    fw->add_option("--chi", chi, "Susceptibility map (ppm)")->required();
    fw->add_option("--chi-background", chi_bg, "Sources outside the brain, added before convolving");
    fw->add_flag("--padded", padded, "Zero-pad to twice the grid before convolving");
    fw->add_option("--out", out, "Output file name");

    // echoes
    double noise_sd = 0.0;
    auto* ec = app.add_subcommand("echoes", "Simulate multi-echo wrapped phase and magnitude");
    common(ec, inv);
    ec->add_option("--field", field, "Total field (ppm)")->required();
    ec->add_option("--mask", mask, "Brain mask; magnitude is 1 inside and 0 outside");
    ec->add_option("--noise-sd", noise_sd, "Complex noise SD relative to unit magnitude");

    // unwrap
    std::vector<std::string> phases, unwrapped, magnitudes;
    auto* uw = app.add_subcommand("unwrap", "Laplacian phase unwrapping");
    common(uw, inv);
    uw->add_option("--phase", phases, "Wrapped phase per echo")->required();
    uw->add_option("--mask", mask, "Mask for the congruent offset");

    // fit-field
    bool with_offset = false;
    auto* ff = app.add_subcommand("fit-field", "Weighted linear fit of phase against TE");
    common(ff, inv);
    ff->add_option("--unwrapped", unwrapped, "Unwrapped phase per echo")->required();
    ff->add_option("--magnitude", magnitudes, "Magnitude per echo; weights are magnitude^2");
    ff->add_flag("--with-offset", with_offset, "Fit a per-voxel phase offset");
    ff->add_option("--out", out, "Output file name");

    // bfr
    std::string method = "resharp";
    double radius = 4.0, lambda = 1e-3, threshold = 0.05;
    int cg_iters = 0;
    auto* bf = app.add_subcommand("bfr", "Background field removal");
    common(bf, inv);
    bf->add_option("--method", method, "sharp|resharp|pdf|lbv")
        ->check(CLI::IsMember({"sharp", "resharp", "pdf", "lbv"}));
    bf->add_option("--field", field, "Total field (ppm)")->required();
    bf->add_option("--mask", mask, "Brain mask")->required();
    bf->add_option("--weight", weight, "PDF noise weighting");
    bf->add_option("--radius", radius, "SMV radius in mm (sharp, resharp)");
    bf->add_option("--lambda", lambda, "Tikhonov weight (resharp)");
    bf->add_option("--threshold", threshold, "Deconvolution threshold (sharp)");
    bf->add_option("--cg-iters", cg_iters, "CG iteration cap");
    bf->add_option("--out", out, "Output file name");

    // invert
    std::string inv_method = "tkd";
    double tkd_threshold = 0.2, lambda_tv = 0.1, tilt = 15.0;
    int iters = 0;
    auto* iv = app.add_subcommand("invert", "Dipole inversion");
    common(iv, inv);
    iv->add_option("--method", inv_method, "tkd|ntv|cosmos")
        ->check(CLI::IsMember({"tkd", "ntv", "cosmos"}));
    iv->add_option("--field", field, "Local field (ppm)");
    iv->add_option("--mask", mask, "Region mask");
    iv->add_option("--chi", chi, "Known chi to simulate orientations from (cosmos)");
    iv->add_option("--weight", weight, "Noise weighting (ntv)");
    iv->add_option("--threshold", tkd_threshold, "Kernel threshold (tkd)");
    iv->add_option("--lambda-tv", lambda_tv, "TV weight (ntv)");
    iv->add_option("--iters", iters, "Iterations (ntv)");
    iv->add_option("--tilt", tilt, "Head tilt in degrees (cosmos)");
    iv->add_option("--noise-sd", noise_sd, "Field noise per orientation, ppm (cosmos)");
    iv->add_option("--out", out, "Output file name");

    // wtfi
    double l1 = 1, l2 = 1, l3 = 1, l4 = 0.03;
    std::string init = "smv", out_field, loss_csv;
    auto* wt = app.add_subcommand("wtfi", "Joint background removal and inversion");
    common(wt, inv);
    wt->add_option("--field", field, "Total field (ppm)")->required();
    wt->add_option("--mask", mask, "Brain mask m2")->required();
    wt->add_option("--local-field", local_field, "Supervision local field")->required();
    wt->add_option("--local-mask", local_mask, "Eroded mask m1; default erodes the brain mask");
    wt->add_option("--weight", weight, "Noise weighting W");
    wt->add_option("--iters", iters, "Iterations");
    wt->add_option("--l1", l1, "Weight of the local-field term");
    wt->add_option("--l2", l2, "Weight of the total-field term");
    wt->add_option("--l3", l3, "Weight of the chi consistency term");
    wt->add_option("--l4", l4, "TV weight");
    wt->add_option("--init", init, "Initial chi: smv|total|pdf")
        ->check(CLI::IsMember({"smv", "total", "pdf"}));
    wt->add_option("--out-chi", out, "Output chi file name");
    wt->add_option("--out-field", out_field, "Output local field file name");
    wt->add_option("--loss-csv", loss_csv, "Loss trace file name");

    // metrics
    std::string region = "brain";
    auto* mt = app.add_subcommand("metrics", "Compare an estimate with a reference chi");
    common(mt, inv);
    mt->add_option("--reference", chi, "Reference chi")->required();
    mt->add_option("--estimate", estimate, "Estimated chi")->required();
    mt->add_option("--mask", mask, "Evaluation mask")->required();
    mt->add_option("--out", out, "CSV file name");

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "Run the stages listed in a JSON config");
    pl->add_option("-c,--config", inv.config_path, "Run config")->required();
    pl->add_option("-o,--output-dir", inv.output_dir,
                   "Output directory (default: config output_dir or qsm_runs/<hash>)");
    inv.output_dir.clear();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        json& doc = inv.doc;
        qsm::RunConfig cfg;
        std::string dir = inv.output_dir;
        if (pl->parsed()) {
            cfg = qsm::load_run_config(inv.config_path);
        } else {
            doc["rng_seed"] = inv.seed;
            if (!inv.dump_slice.empty()) doc["dump_slice"] = parse_slice(inv.dump_slice);
            if (!inv.b0_dir.empty()) {
                const auto b = split_numbers(inv.b0_dir, 3, "--b0-dir");
                doc["acquisition"]["b0_dir"] = b;
            }
            if (!inv.te_ms.empty()) doc["acquisition"]["echo_times_ms"] = inv.te_ms;
            if (dir.empty()) dir = ".";

            if (ph->parsed()) {
                doc["stages"] = {"phantom"};
                json p{{"dims", dims}, {"voxel_size", voxel},
                       {"brain_mask_radius_mm", brain_radius}, {"texture_sd", texture_sd},
                       {"spheres", json::array()}, {"background_sources", json::array()}};
                for (const auto& s : spheres) p["spheres"].push_back(sphere_json(s, "--sphere"));
                for (const auto& s : backgrounds)
                    p["background_sources"].push_back(sphere_json(s, "--background"));
                doc["phantom"] = p;
            } else if (fw->parsed()) {
                doc["stages"] = {"forward"};
                input(doc, "chi", chi);
                input(doc, "chi_background", chi_bg);
                doc["forward"]["padded"] = padded;
                output(doc, "field", out);
            } else if (ec->parsed()) {
                doc["stages"] = {"echoes"};
                input(doc, "field", field);
                input(doc, "mask", mask);
                doc["echoes"]["noise_sd"] = noise_sd;
            } else if (uw->parsed()) {
                doc["stages"] = {"unwrap"};
                input(doc, "echo_phase", phases);
                input(doc, "mask", mask);
            } else if (ff->parsed()) {
                doc["stages"] = {"fit-field"};
                input(doc, "unwrapped", unwrapped);
                input(doc, "echo_magnitude", magnitudes);
                doc["fit-field"]["with_offset"] = with_offset;
                output(doc, "field_fit", out);
            } else if (bf->parsed()) {
                doc["stages"] = {method};
                input(doc, "field", field);
                input(doc, "mask", mask);
                input(doc, "weight", weight);
                json& o = doc[method];
                if (method == "sharp") {
                    o["radius_mm"] = radius;
                    o["threshold"] = threshold;
                } else if (method == "resharp") {
                    o["radius_mm"] = radius;
                    o["lambda"] = lambda;
                }
                if (cg_iters > 0 && method != "sharp") o["cg_max_iter"] = cg_iters;
                output(doc, ("local_field_" + method).c_str(), out);
            } else if (iv->parsed()) {
                doc["stages"] = {inv_method};
                input(doc, "mask", mask);
                input(doc, "weight", weight);
                if (inv_method == "cosmos") {
                    input(doc, "chi", chi);
                    doc["cosmos"] = {{"tilt_deg", tilt}, {"noise_sd", noise_sd}};
                } else {
                    input(doc, "field", field);
                }
                if (inv_method == "tkd") doc["tkd"]["threshold"] = tkd_threshold;
                if (inv_method == "ntv") {
                    doc["ntv"]["lambda_tv"] = lambda_tv;
                    if (iters > 0) doc["ntv"]["iterations"] = iters;
                }
                output(doc, ("chi_" + inv_method).c_str(), out);
            } else if (wt->parsed()) {
                doc["stages"] = {"wtfi"};
                input(doc, "field", field);
                input(doc, "mask", mask);
                input(doc, "local_field", local_field);
                input(doc, "local_mask", local_mask);
                input(doc, "weight", weight);
                json w{{"lambda1", l1}, {"lambda2", l2}, {"lambda3", l3}, {"lambda4", l4},
                       {"seed", init}};
                if (iters > 0) w["iterations"] = iters;
                doc["wtfi"] = w;
                output(doc, "chi_wtfi", out);
                output(doc, "local_field_wtfi", out_field);
                output(doc, "wtfi_loss", loss_csv);
            } else if (mt->parsed()) {
                doc["stages"] = {"metrics"};
                input(doc, "chi", chi);
                input(doc, "estimate", estimate);
                input(doc, "mask", mask);
                output(doc, "metrics", out);
            }
            cfg = qsm::parse_run_config(doc);
        }
        const auto result = qsm::run_pipeline(cfg, dir);
        for (const auto& p : result.written) std::cout << p.string() << '\n';
        return 0;
    } catch (const qsm::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const qsm::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
