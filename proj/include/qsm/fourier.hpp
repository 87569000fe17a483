#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qsm/volume.hpp"

namespace qsm {

/// Unnormalised forward DFT. With the 1/N inverse this gives
/// sum|v|^2 == (1/N) sum|V|^2.
SpectralVolume fourier_forward(const ScalarVolume& v);

/// Normalised inverse DFT, real part. The imaginary residue of a Hermitian
/// spectrum is discarded.
ScalarVolume fourier_inverse(const SpectralVolume& s, Unit unit = Unit::arbitrary);

/// As above, but rejects a spectrum whose dims differ from `expected`.
ScalarVolume fourier_inverse(const SpectralVolume& s, const Dims& expected, Unit unit);

/// In-place complex 3D DFT on x-fastest data. The inverse is normalised by 1/N.
void fft3(std::span<std::complex<double>> data, const Dims& dims, bool inverse);

/// ifft(fft(v) * filter) for a real filter in FFT ordering. The output is real
/// whenever the filter is even under k -> -k.
ScalarVolume apply_real_filter(const ScalarVolume& v, std::span<const double> filter);

/// Largest |imag| seen by the last apply_real_filter call on this thread
/// relative to max |real|. Exposed for the realness contract tests.
double last_imaginary_residue();

/// 3D DCT-II (FFTW REDFT10), unnormalised. Equivalent to the DFT of the
/// half-sample mirror extension to 2N per axis.
void cosine_forward(std::span<double> data, const Dims& dims);
/// 3D DCT-III (REDFT01), normalised so cosine_inverse(cosine_forward(x)) == x.
void cosine_inverse(std::span<double> data, const Dims& dims);

/// Per-axis spatial frequencies in cycles/mm. Every k-space operator builds
/// its grid here so the convention is shared.
struct FrequencyGrid {
    std::vector<double> kx, ky, kz;

    /// n/(N d) with n in the signed FFT range.
    static FrequencyGrid fft(const Dims& dims, const Spacing& spacing);
    /// n/(2 N d), n = 0..N-1: the DCT-II basis frequencies.
    static FrequencyGrid cosine(const Dims& dims, const Spacing& spacing);

    [[nodiscard]] double k2(std::size_t x, std::size_t y, std::size_t z) const {
        return kx[x] * kx[x] + ky[y] * ky[y] + kz[z] * kz[z];
    }
};

} // namespace qsm
