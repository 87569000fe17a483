#pragma once

#include <string>
#include <vector>

#include "qsm/volume.hpp"

namespace qsm {

struct BfrResult {
    ScalarVolume local_field; ///< ppm, zero outside mask_out
    Mask mask_out;
    std::string method;
    int iterations_used = 0;
    double residual_norm = 0.0; ///< relative CG residual at exit
    bool converged = true;
};

enum class SmvShape {
    binary,   ///< voxel centres within the radius, matching erode_mask
    subvoxel, ///< 3x3x3 sub-sample occupancy, matching the phantom rasteriser
};

/// Unit-mass sphere kernel in FFT ordering (centre at index 0) and its real spectrum.
std::vector<double> smv_spectrum(const Dims& dims, const Spacing& spacing, double radius_mm,
                                 SmvShape shape = SmvShape::binary);

/// Spherical mean value filter, applied spectrally (periodic boundary).
ScalarVolume smv_convolve(const ScalarVolume& v, double radius_mm,
                          SmvShape shape = SmvShape::binary);

struct SharpOptions {
    double radius_mm = 4.0;
    double threshold = 0.05;
    SmvShape shape = SmvShape::binary;
};
BfrResult sharp(const ScalarVolume& total_field, const Mask& m2, const SharpOptions& opt = {});

struct ResharpOptions {
    double radius_mm = 4.0;
    double lambda = 1e-3;
    double cg_tol = 1e-6;
    int cg_max_iter = 100;
    SmvShape shape = SmvShape::binary;
};
BfrResult resharp(const ScalarVolume& total_field, const Mask& m2,
                  const ResharpOptions& opt = {});

struct PdfOptions {
    double cg_tol = 1e-6;
    int cg_max_iter = 300;
    Vec3 b0_dir{0.0, 0.0, 1.0};
};
/// `weight` may be empty for uniform weighting.
BfrResult pdf(const ScalarVolume& total_field, const Mask& m2, const ScalarVolume& weight,
              const PdfOptions& opt = {});

struct LbvOptions {
    double cg_tol = 1e-6;
    int cg_max_iter = 1000;
};
BfrResult lbv(const ScalarVolume& total_field, const Mask& m2, const LbvOptions& opt = {});

} // namespace qsm
