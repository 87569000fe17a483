#include "qsm/png_slice.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <fmt/format.h>
#include <png.h>

#include "qsm/error.hpp"

namespace qsm {

void write_slice_png(const ScalarVolume& v, std::size_t z, const std::filesystem::path& path) {
    const Dims& d = v.dims();
    require(z < d.nz, fmt::format("slice z={} is outside 0..{}", z, d.nz - 1));
    const std::size_t start = d.index(0, 0, z), n = d.nx * d.ny;
    const auto first = v.values().begin() + static_cast<std::ptrdiff_t>(start);
    const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(n));
    const double span = *hi - *lo;

    // PNG rows run top to bottom; flip y so anterior is up.
    std::vector<png_byte> pixels(n);
    for (std::size_t y = 0; y < d.ny; ++y)
        for (std::size_t x = 0; x < d.nx; ++x) {
            const double value = v.at(x, y, z);
            const double t = span > 0 ? (value - *lo) / span : 0.5;
            pixels[(d.ny - 1 - y) * d.nx + x] =
                static_cast<png_byte>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
        }

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(d.nx);
    image.height = static_cast<png_uint_32>(d.ny);
    image.format = PNG_FORMAT_GRAY;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr))
        throw ValidationError(fmt::format("PNG write failed for '{}': {}", path.string(),
                                          image.message));
}

} // namespace qsm
