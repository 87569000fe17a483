#include "qsm/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "qsm/error.hpp"
#include "qsm/kernels.hpp"

namespace qsm {

namespace {

enum class PlanKind { dft_forward, dft_backward, dct2, dct3 };

using PlanKey = std::tuple<std::size_t, std::size_t, std::size_t, PlanKind>;

// FFTW planning is not thread-safe; execution on distinct buffers is. Plans are
// made with FFTW_ESTIMATE so the chosen algorithm, and therefore the rounding,
// is the same on every run.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(const Dims& dims, PlanKind kind) {
        std::lock_guard lock(mutex_);
        const PlanKey key{dims.nx, dims.ny, dims.nz, kind};
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        const int n[3] = {static_cast<int>(dims.nz), static_cast<int>(dims.ny),
                          static_cast<int>(dims.nx)};
        fftw_plan plan = nullptr;
        if (kind == PlanKind::dft_forward || kind == PlanKind::dft_backward) {
            auto* buf = fftw_alloc_complex(dims.size());
            plan = fftw_plan_dft(3, n, buf, buf,
                                 kind == PlanKind::dft_forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
            fftw_free(buf);
        } else {
            auto* buf = fftw_alloc_real(dims.size());
            const fftw_r2r_kind k = kind == PlanKind::dct2 ? FFTW_REDFT10 : FFTW_REDFT01;
            const fftw_r2r_kind kinds[3] = {k, k, k};
            plan = fftw_plan_r2r(3, n, buf, buf, kinds, FFTW_ESTIMATE);
            fftw_free(buf);
        }
        if (!plan) throw NumericalError("FFTW failed to create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

template <typename T>
struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    T* data;
};

thread_local double g_last_imag_residue = 0.0;

std::vector<double> axis_fft_frequencies(std::size_t n, double d) {
    std::vector<double> k(n);
    const auto sn = static_cast<long>(n);
    for (long i = 0; i < sn; ++i) {
        const long signed_i = i < (sn + 1) / 2 ? i : i - sn;
        k[static_cast<std::size_t>(i)] = static_cast<double>(signed_i) / (static_cast<double>(n) * d);
    }
    return k;
}

std::vector<double> axis_cosine_frequencies(std::size_t n, double d) {
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i)
        k[i] = static_cast<double>(i) / (2.0 * static_cast<double>(n) * d);
    return k;
}

} // namespace

void fft3(std::span<std::complex<double>> data, const Dims& dims, bool inverse) {
    require(dims.size() > 0, "fft3: empty dims");
    require(data.size() == dims.size(), "fft3: data size does not match dims");
    fftw_plan plan =
        plan_cache().get(dims, inverse ? PlanKind::dft_backward : PlanKind::dft_forward);
    FftwBuffer<fftw_complex> buf(dims.size());
    std::memcpy(buf.data, data.data(), sizeof(fftw_complex) * dims.size());
    fftw_execute_dft(plan, buf.data, buf.data);
    std::memcpy(static_cast<void*>(data.data()), buf.data, sizeof(fftw_complex) * dims.size());
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(dims.size());
        for (auto& v : data) v *= scale;
    }
}

SpectralVolume fourier_forward(const ScalarVolume& v) {
    require(!v.empty(), "fourier_forward: empty volume");
    std::vector<std::complex<double>> data(v.values().begin(), v.values().end());
    fft3(data, v.dims(), false);
    return SpectralVolume(v.dims(), v.spacing(), std::move(data));
}

ScalarVolume fourier_inverse(const SpectralVolume& s, Unit unit) {
    std::vector<std::complex<double>> data(s.values().begin(), s.values().end());
    fft3(data, s.dims(), true);
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
    return ScalarVolume(s.dims(), s.spacing(), std::move(out), unit);
}

ScalarVolume fourier_inverse(const SpectralVolume& s, const Dims& expected, Unit unit) {
    require_same_dims(s.dims(), expected, "fourier_inverse");
    return fourier_inverse(s, unit);
}

ScalarVolume apply_real_filter(const ScalarVolume& v, std::span<const double> filter) {
    require(filter.size() == v.size(), "apply_real_filter: filter size does not match volume");
    std::vector<std::complex<double>> data(v.values().begin(), v.values().end());
    fft3(data, v.dims(), false);
    kernels::parallel::multiply_spectrum(data, filter);
    fft3(data, v.dims(), true);
    std::vector<double> out(data.size());
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i] = data[i].real();
        max_re = std::max(max_re, std::abs(data[i].real()));
        max_im = std::max(max_im, std::abs(data[i].imag()));
    }
    g_last_imag_residue = max_re > 0 ? max_im / max_re : max_im;
    return ScalarVolume(v.dims(), v.spacing(), std::move(out), v.unit());
}

double last_imaginary_residue() { return g_last_imag_residue; }

void cosine_forward(std::span<double> data, const Dims& dims) {
    require(data.size() == dims.size(), "cosine_forward: data size does not match dims");
    fftw_plan plan = plan_cache().get(dims, PlanKind::dct2);
    FftwBuffer<double> buf(dims.size());
    std::copy(data.begin(), data.end(), buf.data);
    fftw_execute_r2r(plan, buf.data, buf.data);
    std::copy(buf.data, buf.data + dims.size(), data.begin());
}

void cosine_inverse(std::span<double> data, const Dims& dims) {
    require(data.size() == dims.size(), "cosine_inverse: data size does not match dims");
    fftw_plan plan = plan_cache().get(dims, PlanKind::dct3);
    FftwBuffer<double> buf(dims.size());
    std::copy(data.begin(), data.end(), buf.data);
    fftw_execute_r2r(plan, buf.data, buf.data);
    const double scale = 1.0 / (8.0 * static_cast<double>(dims.size()));
    for (std::size_t i = 0; i < dims.size(); ++i) data[i] = buf.data[i] * scale;
}

FrequencyGrid FrequencyGrid::fft(const Dims& dims, const Spacing& spacing) {
    return {axis_fft_frequencies(dims.nx, spacing.dx), axis_fft_frequencies(dims.ny, spacing.dy),
            axis_fft_frequencies(dims.nz, spacing.dz)};
}

FrequencyGrid FrequencyGrid::cosine(const Dims& dims, const Spacing& spacing) {
    return {axis_cosine_frequencies(dims.nx, spacing.dx),
            axis_cosine_frequencies(dims.ny, spacing.dy),
            axis_cosine_frequencies(dims.nz, spacing.dz)};
}

} // namespace qsm
