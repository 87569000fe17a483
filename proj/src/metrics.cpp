#include "qsm/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/kernels.hpp"

namespace qsm {

namespace kern = kernels::parallel;

namespace {

constexpr double kSigma = 1.5;
constexpr int kLogTaps = 15;
constexpr int kSsimTaps = 11;

std::vector<double> gaussian_taps(int taps) {
    std::vector<double> g(static_cast<std::size_t>(taps));
    const int half = taps / 2;
    double total = 0;
    for (int i = -half; i <= half; ++i) {
        g[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (kSigma * kSigma));
        total += g[static_cast<std::size_t>(i + half)];
    }
    for (double& v : g) v /= total;
    return g;
}

// Second derivative of the Gaussian, shifted to sum to zero so the
// separable product kills constants exactly.
std::vector<double> gaussian_second_derivative_taps(int taps) {
    const auto g = gaussian_taps(taps);
    std::vector<double> d(g.size());
    const int half = taps / 2;
    double total = 0;
    for (int i = -half; i <= half; ++i) {
        const double x = i;
        const auto k = static_cast<std::size_t>(i + half);
        d[k] = g[k] * (x * x - kSigma * kSigma) / std::pow(kSigma, 4);
        total += d[k];
    }
    for (double& v : d) v -= total / static_cast<double>(d.size());
    return d;
}

std::vector<double> separable(std::span<const double> in, const Dims& dims,
                              const std::array<const std::vector<double>*, 3>& taps,
                              kernels::Padding padding) {
    std::vector<double> a(in.begin(), in.end()), b(in.size());
    for (int axis = 0; axis < 3; ++axis) {
        kern::convolve_axis(a, dims, axis, *taps[static_cast<std::size_t>(axis)], padding, b);
        a.swap(b);
    }
    return a;
}

double ssim_impl(const ScalarVolume& a_in, const ScalarVolume& b_in, const Mask& mask,
                 double range) {
    const Dims& dims = a_in.dims();
    const std::size_t n = a_in.size();
    const auto g = gaussian_taps(kSsimTaps);
    const std::array<const std::vector<double>*, 3> taps{&g, &g, &g};
    const auto blur = [&](const std::vector<double>& v) {
        return separable(v, dims, taps, kernels::Padding::zero);
    };

    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = mask[i] ? a_in[i] : 0.0;
        b[i] = mask[i] ? b_in[i] : 0.0;
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = blur(a), mu_b = blur(b), e_aa = blur(aa), e_bb = blur(bb), e_ab = blur(ab);
    const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);

    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const double va = e_aa[i] - mu_a[i] * mu_a[i];
        const double vb = e_bb[i] - mu_b[i] * mu_b[i];
        const double cov = e_ab[i] - mu_a[i] * mu_b[i];
        acc += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mask.count());
}

} // namespace

ScalarVolume laplacian_of_gaussian(const ScalarVolume& v) {
    const auto g = gaussian_taps(kLogTaps);
    const auto d2 = gaussian_second_derivative_taps(kLogTaps);
    std::vector<double> out(v.size(), 0.0);
    for (int axis = 0; axis < 3; ++axis) {
        std::array<const std::vector<double>*, 3> taps{&g, &g, &g};
        taps[static_cast<std::size_t>(axis)] = &d2;
        const auto term = separable(v.values(), v.dims(), taps, kernels::Padding::replicate);
        kern::axpy(1.0, term, out);
    }
    return ScalarVolume(v.dims(), v.spacing(), std::move(out), v.unit());
}

double ssim(const ScalarVolume& a, const ScalarVolume& b, const Mask& mask,
            double dynamic_range) {
    require_same_dims(a.dims(), b.dims(), "ssim");
    require_same_dims(a.dims(), mask.dims(), "ssim mask");
    require(mask.count() > 0, "ssim: empty mask");
    require(dynamic_range > 0, "ssim: dynamic range must be positive");
    return ssim_impl(a, b, mask, dynamic_range);
}

MetricReport evaluate_metrics(const ScalarVolume& pred, const ScalarVolume& ref,
                              const Mask& mask) {
    require_same_dims(pred.dims(), ref.dims(), "evaluate_metrics");
    require_same_dims(pred.dims(), mask.dims(), "evaluate_metrics mask");
    const std::size_t count = mask.count();
    require(count > 0, "evaluate_metrics: empty mask");
    const double ref_norm = masked_norm(ref, mask);
    require(ref_norm > 0, "evaluate_metrics: reference is zero over the mask, NRMSE undefined");

    MetricReport r;
    const ScalarVolume diff = pred - ref;
    const double err_norm = masked_norm(diff, mask);
    r.nrmse_pct = 100.0 * err_norm / ref_norm;

    double peak = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (mask[i]) {
            peak = std::max(peak, std::abs(ref[i]));
            lo = std::min(lo, ref[i]);
            hi = std::max(hi, ref[i]);
        }
    const double rmse = err_norm / std::sqrt(static_cast<double>(count));
    r.psnr_db = rmse > 0 ? 20.0 * std::log10(peak / rmse)
                         : std::numeric_limits<double>::infinity();

    const ScalarVolume log_ref = laplacian_of_gaussian(ref);
    const double log_ref_norm = masked_norm(log_ref, mask);
    const double log_err = masked_norm(laplacian_of_gaussian(pred) - log_ref, mask);
    r.hfen_pct = log_ref_norm > 0 ? 100.0 * log_err / log_ref_norm : (log_err > 0 ? 100.0 : 0.0);

    // A flat reference has no range; fall back to its magnitude so the constants stay positive.
    const double range = hi > lo ? hi - lo : std::max(peak, 1e-12);
    r.ssim = ssim_impl(pred, ref, mask, range);
    return r;
}

std::string metrics_csv_header() { return "method,pSNR (dB),NRMSE (%),HFEN (%),SSIM (0-1)"; }

std::string metrics_csv_row(std::string_view method, const MetricReport& report) {
    return fmt::format("{},{:.4f},{:.4f},{:.4f},{:.6f}", method,
                       std::min(report.psnr_db, kPsnrDisplayCap), report.nrmse_pct,
                       report.hfen_pct, report.ssim);
}

} // namespace qsm
