#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsm/bfr.hpp"
#include "qsm/inversion.hpp"
#include "qsm/phantom.hpp"
#include "qsm/unwrap.hpp"
#include "qsm/wtfi.hpp"

namespace qsm {

struct AcquisitionParams {
    double b0_tesla = 3.0;
    Vec3 b0_dir{0.0, 0.0, 1.0};
    std::vector<double> echo_times_ms{10.4, 17.4, 24.4, 31.4};
    /// Echo time behind the radians-per-ppm scale of the nonlinear data terms.
    double effective_te_ms = 20.0;

    [[nodiscard]] AcquisitionMeta meta(const Spacing& spacing) const;
    [[nodiscard]] double phase_scale() const;
};

struct CosmosParams {
    double tilt_deg = 15.0;
    double epsilon = 1e-6;
    double noise_sd = 0.0; ///< ppm, added to each simulated orientation
};

struct WtfiParams {
    LossWeights weights;
    WtfiOptions options;
    /// m1 when no eroded mask comes from an upstream stage.
    double erosion_radius_mm = 4.0;
};

/// One pipeline run. Parsed strictly: unknown keys and stage names are errors.
struct RunConfig {
    std::vector<std::string> stages;
    std::uint64_t rng_seed = 0;
    std::string output_dir;
    /// Artifacts supplied as files, e.g. {"field": ["f.nii"]}; lists for echoes.
    std::map<std::string, std::vector<std::string>> inputs;
    /// Output filename overrides keyed by artifact file stem, e.g. {"chi_wtfi": "out.nii"}.
    std::map<std::string, std::string> outputs;
    std::optional<std::size_t> dump_slice;

    PhantomSpec phantom;
    AcquisitionParams acquisition;
    bool forward_padded = false;
    double echo_noise_sd = 0.0;
    FitOptions fit;
    SharpOptions sharp;
    ResharpOptions resharp;
    PdfOptions pdf;
    LbvOptions lbv;
    double tkd_threshold = 0.2;
    NtvOptions ntv;
    CosmosParams cosmos;
    WtfiParams wtfi;
    std::string metrics_region = "brain"; ///< brain | local

    /// The document as parsed, kept for sidecars and the config hash.
    nlohmann::json source = nlohmann::json::object();
};

/// Stage names understood by the pipeline, in canonical order.
const std::vector<std::string>& known_stages();

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// First 12 hex digits of the SHA-256 of the canonical JSON dump.
std::string config_hash(const RunConfig& config);

} // namespace qsm
