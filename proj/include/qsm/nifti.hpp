#pragma once

#include <filesystem>

#include "qsm/volume.hpp"

namespace qsm {

/// Minimal single-file NIfTI-1 (.nii). Writes little-endian float32 with a
/// 352-byte preamble; reads uint8/int16/int32/float32/float64, optionally
/// gzip-compressed. The physical unit travels in the descrip field.
ScalarVolume read_volume(const std::filesystem::path& path);
void write_volume(const ScalarVolume& v, const std::filesystem::path& path);

/// Masks are stored as uint8 0/1 volumes.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const Mask& m, const Spacing& spacing, const std::filesystem::path& path);

/// Voxel size of a stored volume or mask without reading the payload.
Spacing read_spacing(const std::filesystem::path& path);

} // namespace qsm
