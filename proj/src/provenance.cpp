#include "qsm/provenance.hpp"

#include <array>
#include <chrono>
#include <fstream>
#include <memory>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "qsm/error.hpp"

namespace qsm {

namespace {

struct DigestCtx {
    DigestCtx() : ctx(EVP_MD_CTX_new()) {
        if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 initialisation failed");
    }
    ~DigestCtx() { EVP_MD_CTX_free(ctx); }
    DigestCtx(const DigestCtx&) = delete;
    DigestCtx& operator=(const DigestCtx&) = delete;

    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx, data, n); }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx, md.data(), &len);
        std::string out;
        for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
        return out;
    }
    EVP_MD_CTX* ctx;
};

} // namespace

std::string sha256_hex(std::string_view bytes) {
    DigestCtx d;
    d.update(bytes.data(), bytes.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot hash '{}': not readable", path.string()));
    DigestCtx d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

std::filesystem::path sidecar_path(const std::filesystem::path& output) {
    return std::filesystem::path(output.string() + ".json");
}

void write_sidecar(const std::filesystem::path& output, const std::string& stage,
                   const nlohmann::json& parameters, const std::vector<ProvenanceInput>& inputs,
                   const nlohmann::json& extra) {
    nlohmann::json j;
    j["stage"] = stage;
    j["parameters"] = parameters;
    j["inputs"] = nlohmann::json::array();
    for (const auto& in : inputs)
        j["inputs"].push_back({{"artifact", in.artifact},
                               {"path", in.path.filename().string()},
                               {"sha256", sha256_file(in.path)}});
    j["output"] = {{"path", output.filename().string()}, {"sha256", sha256_file(output)}};
    j["software"] = {{"name", "qsm"}, {"version", QSM_VERSION}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    j["timestamp"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                                 std::chrono::floor<std::chrono::seconds>(
                                     std::chrono::system_clock::now()));
    std::ofstream(sidecar_path(output)) << j.dump(2) << '\n';
}

} // namespace qsm
