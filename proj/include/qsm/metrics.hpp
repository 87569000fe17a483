#pragma once

#include <string>
#include <string_view>

#include "qsm/volume.hpp"

namespace qsm {

struct MetricReport {
    double psnr_db = 0;   ///< +inf when pred == ref over the mask
    double nrmse_pct = 0;
    double hfen_pct = 0;
    double ssim = 0;
};

/// Display cap for pSNR in reports.
inline constexpr double kPsnrDisplayCap = 99.9;

/// pSNR, NRMSE, HFEN and SSIM of `pred` against `ref` over `mask`.
///  - pSNR peak is max |ref| over the mask, RMSE over mask voxels.
///  - HFEN uses a zero-mean Laplacian-of-Gaussian, 15 taps per axis, sigma 1.5
///    voxels, replicate padding.
///  - SSIM uses an 11-tap Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03 and
///    the ref range over the mask; inputs are zero outside the mask.
/// Throws ValidationError when ref is zero over the mask.
MetricReport evaluate_metrics(const ScalarVolume& pred, const ScalarVolume& ref, const Mask& mask);

/// Mean local SSIM over `mask` with an explicit dynamic range. Symmetric in a, b.
double ssim(const ScalarVolume& a, const ScalarVolume& b, const Mask& mask, double dynamic_range);

/// Laplacian of Gaussian used by HFEN.
ScalarVolume laplacian_of_gaussian(const ScalarVolume& v);

std::string metrics_csv_header();
std::string metrics_csv_row(std::string_view method, const MetricReport& report);

} // namespace qsm
