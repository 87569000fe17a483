#pragma once

#include <filesystem>
#include <vector>

#include "qsm/config.hpp"

namespace qsm {

struct PipelineResult {
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> written; ///< data files, in write order
};

/// Runs cfg.stages in order, writing every artifact with a provenance sidecar.
/// `output_dir` overrides cfg.output_dir; when both are empty the run goes to
/// qsm_runs/<config hash>. Errors keep their type and name the failing stage.
PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& output_dir = {});

} // namespace qsm
