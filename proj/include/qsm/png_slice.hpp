#pragma once

#include <filesystem>

#include "qsm/volume.hpp"

namespace qsm {

/// Writes axial slice `z` as 8-bit grayscale, linearly windowed to the slice's
/// own min..max (a flat slice comes out mid-gray).
void write_slice_png(const ScalarVolume& v, std::size_t z, const std::filesystem::path& path);

} // namespace qsm
