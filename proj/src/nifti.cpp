#include "qsm/nifti.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <zlib.h>

#include "qsm/error.hpp"

namespace qsm {

static_assert(std::endian::native == std::endian::little, "NIfTI I/O assumes a little-endian host");

namespace {

constexpr int kHeaderSize = 348;
constexpr int kDataOffset = 352;

enum Datatype : std::int16_t {
    dt_uint8 = 2,
    dt_int16 = 4,
    dt_int32 = 8,
    dt_float32 = 16,
    dt_float64 = 64,
};

// Byte offsets from the NIfTI-1 header layout.
namespace off {
constexpr int sizeof_hdr = 0;
constexpr int regular = 38;
constexpr int dim = 40;
constexpr int datatype = 70;
constexpr int bitpix = 72;
constexpr int pixdim = 76;
constexpr int vox_offset = 108;
constexpr int scl_slope = 112;
constexpr int scl_inter = 116;
constexpr int xyzt_units = 123;
constexpr int descrip = 148;
constexpr int qform_code = 252;
constexpr int sform_code = 254;
constexpr int srow_x = 280;
constexpr int magic = 344;
} // namespace off

template <typename T>
T get(const std::vector<char>& b, int at) {
    T v;
    std::memcpy(&v, b.data() + at, sizeof(T));
    return v;
}

template <typename T>
void put(std::vector<char>& b, int at, T v) {
    std::memcpy(b.data() + at, &v, sizeof(T));
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
    unsigned char sig[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(sig), 2);
    probe.close();

    if (sig[0] == 0x1f && sig[1] == 0x8b) {
        gzFile gz = gzopen(path.string().c_str(), "rb");
        if (!gz) throw FormatError(fmt::format("cannot open gzip stream '{}'", path.string()));
        std::vector<char> out;
        std::array<char, 1 << 16> chunk{};
        int n = 0;
        while ((n = gzread(gz, chunk.data(), static_cast<unsigned>(chunk.size()))) > 0)
            out.insert(out.end(), chunk.begin(), chunk.begin() + n);
        const bool failed = n < 0;
        gzclose(gz);
        if (failed) throw FormatError(fmt::format("corrupt gzip data in '{}'", path.string()));
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Parsed {
    Dims dims;
    Spacing spacing;
    Unit unit = Unit::arbitrary;
    std::int16_t datatype = 0;
    std::size_t data_at = 0;
    float slope = 1.0f, inter = 0.0f;
};

Parsed parse_header(const std::vector<char>& b, const std::string& name) {
    if (b.size() < kHeaderSize)
        throw FormatError(fmt::format("{}: file shorter than a NIfTI-1 header", name));
    const auto size = get<std::int32_t>(b, off::sizeof_hdr);
    if (size != kHeaderSize) {
        if (static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(size))) == kHeaderSize)
            throw FormatError(fmt::format("{}: big-endian NIfTI is not supported", name));
        throw FormatError(fmt::format("{}: sizeof_hdr is {}, expected 348", name, size));
    }
    const std::string magic(b.data() + off::magic, 4);
    if (magic != std::string("n+1\0", 4))
        throw FormatError(fmt::format("{}: bad magic '{}' (expected single-file 'n+1')", name,
                                      magic.substr(0, magic.find('\0'))));

    Parsed p;
    const auto ndim = get<std::int16_t>(b, off::dim);
    if (ndim < 1 || ndim > 3)
        throw FormatError(fmt::format("{}: {} dimensions, only 1 to 3 are supported", name, ndim));
    std::size_t n[3] = {1, 1, 1};
    float px[3] = {1.0f, 1.0f, 1.0f};
    for (int a = 0; a < ndim; ++a) {
        const auto d = get<std::int16_t>(b, off::dim + 2 * (a + 1));
        if (d < 1) throw FormatError(fmt::format("{}: dim[{}] = {}", name, a + 1, d));
        n[a] = static_cast<std::size_t>(d);
        px[a] = get<float>(b, off::pixdim + 4 * (a + 1));
        if (!(px[a] > 0.0f) || !std::isfinite(px[a]))
            throw FormatError(fmt::format("{}: pixdim[{}] = {} is not positive", name, a + 1, px[a]));
    }
    p.dims = {n[0], n[1], n[2]};
    p.spacing = {px[0], px[1], px[2]};

    p.datatype = get<std::int16_t>(b, off::datatype);
    switch (p.datatype) {
    case dt_uint8: case dt_int16: case dt_int32: case dt_float32: case dt_float64: break;
    default: throw FormatError(fmt::format("{}: unsupported datatype {}", name, p.datatype));
    }
    const float vox = get<float>(b, off::vox_offset);
    if (vox < kHeaderSize) throw FormatError(fmt::format("{}: vox_offset {} is inside the header", name, vox));
    p.data_at = static_cast<std::size_t>(vox);
    const float slope = get<float>(b, off::scl_slope);
    if (slope != 0.0f && std::isfinite(slope)) {
        p.slope = slope;
        p.inter = get<float>(b, off::scl_inter);
    }

    std::string descrip(b.data() + off::descrip, 80);
    descrip = descrip.substr(0, descrip.find('\0'));
    if (const auto at = descrip.find("unit="); at != std::string::npos) {
        const auto end = descrip.find(' ', at);
        p.unit = unit_from_string(descrip.substr(at + 5, end == std::string::npos ? end : end - at - 5));
    }
    return p;
}

std::size_t bytes_per_voxel(std::int16_t dt) {
    switch (dt) {
    case dt_uint8: return 1;
    case dt_int16: return 2;
    case dt_int32: case dt_float32: return 4;
    default: return 8;
    }
}

std::vector<double> decode(const std::vector<char>& b, const Parsed& p, const std::string& name) {
    const std::size_t count = p.dims.size();
    const std::size_t width = bytes_per_voxel(p.datatype);
    if (b.size() < p.data_at + count * width)
        throw FormatError(fmt::format("{}: payload truncated ({} bytes, need {})", name, b.size(),
                                      p.data_at + count * width));
    std::vector<double> out(count);
    const char* src = b.data() + p.data_at;
    for (std::size_t i = 0; i < count; ++i) {
        const char* at = src + i * width;
        double v = 0.0;
        switch (p.datatype) {
        case dt_uint8: v = static_cast<unsigned char>(*at); break;
        case dt_int16: { std::int16_t x; std::memcpy(&x, at, 2); v = x; break; }
        case dt_int32: { std::int32_t x; std::memcpy(&x, at, 4); v = x; break; }
        case dt_float32: { float x; std::memcpy(&x, at, 4); v = x; break; }
        default: { double x; std::memcpy(&x, at, 8); v = x; break; }
        }
        out[i] = p.slope * v + p.inter;
        if (!std::isfinite(out[i]))
            throw FormatError(fmt::format("{}: non-finite voxel value at index {}", name, i));
    }
    return out;
}

std::vector<char> make_header(const Dims& dims, const Spacing& sp, std::int16_t datatype,
                              std::int16_t bitpix, Unit unit) {
    for (int a = 0; a < 3; ++a)
        require(dims[a] <= 32767, "NIfTI-1 dimensions are limited to 32767");
    std::vector<char> h(kDataOffset, 0);
    put<std::int32_t>(h, off::sizeof_hdr, kHeaderSize);
    h[off::regular] = 'r';
    put<std::int16_t>(h, off::dim, 3);
    for (int a = 0; a < 3; ++a) put<std::int16_t>(h, off::dim + 2 * (a + 1), static_cast<std::int16_t>(dims[a]));
    for (int a = 4; a < 8; ++a) put<std::int16_t>(h, off::dim + 2 * a, 1);
    put<std::int16_t>(h, off::datatype, datatype);
    put<std::int16_t>(h, off::bitpix, bitpix);
    put<float>(h, off::pixdim, 1.0f);
    for (int a = 0; a < 3; ++a) put<float>(h, off::pixdim + 4 * (a + 1), static_cast<float>(sp[a]));
    put<float>(h, off::vox_offset, static_cast<float>(kDataOffset));
    put<float>(h, off::scl_slope, 1.0f);
    h[off::xyzt_units] = 2; // millimetres
    const std::string descrip = fmt::format("qsm unit={}", to_string(unit));
    std::memcpy(h.data() + off::descrip, descrip.data(), descrip.size());
    // Scanner frame: diagonal, with voxel n/2 at the origin.
    put<std::int16_t>(h, off::sform_code, 1);
    put<std::int16_t>(h, off::qform_code, 0);
    for (int r = 0; r < 3; ++r) {
        put<float>(h, off::srow_x + 16 * r + 4 * r, static_cast<float>(sp[r]));
        put<float>(h, off::srow_x + 16 * r + 12,
                   static_cast<float>(-static_cast<double>(dims[r] / 2) * sp[r]));
    }
    std::memcpy(h.data() + off::magic, "n+1\0", 4);
    return h;
}

void write_file(const std::vector<char>& bytes, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError(fmt::format("write failed for '{}'", path.string()));
}

} // namespace

ScalarVolume read_volume(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const Parsed p = parse_header(bytes, path.string());
    return ScalarVolume(p.dims, p.spacing, decode(bytes, p, path.string()), p.unit);
}

void write_volume(const ScalarVolume& v, const std::filesystem::path& path) {
    std::vector<char> bytes = make_header(v.dims(), v.spacing(), dt_float32, 32, v.unit());
    bytes.resize(kDataOffset + 4 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const float f = static_cast<float>(v[i]);
        std::memcpy(bytes.data() + kDataOffset + 4 * i, &f, 4);
    }
    write_file(bytes, path);
}

Mask read_mask(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const Parsed p = parse_header(bytes, path.string());
    const auto values = decode(bytes, p, path.string());
    std::vector<std::uint8_t> m(values.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = values[i] != 0.0 ? 1 : 0;
    return Mask(p.dims, std::move(m));
}

void write_mask(const Mask& m, const Spacing& spacing, const std::filesystem::path& path) {
    std::vector<char> bytes = make_header(m.dims(), spacing, dt_uint8, 8, Unit::dimensionless);
    bytes.resize(kDataOffset + m.size());
    for (std::size_t i = 0; i < m.size(); ++i) bytes[kDataOffset + i] = m[i] ? 1 : 0;
    write_file(bytes, path);
}

Spacing read_spacing(const std::filesystem::path& path) {
    return parse_header(read_file(path), path.string()).spacing;
}

} // namespace qsm
