#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace qsm {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

struct ProvenanceInput {
    std::string artifact;
    std::filesystem::path path;
};

/// Writes `<output>.json` describing how `output` was made: stage, parameters,
/// input hashes, output hash, software version and a UTC timestamp. The
/// timestamp is the only field that differs between identical reruns.
void write_sidecar(const std::filesystem::path& output, const std::string& stage,
                   const nlohmann::json& parameters, const std::vector<ProvenanceInput>& inputs,
                   const nlohmann::json& extra = nlohmann::json::object());

std::filesystem::path sidecar_path(const std::filesystem::path& output);

} // namespace qsm
