#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stmcirc {

/// In-place iterative radix-2 FFT (forward, e^{-j 2 pi k n / N} kernel).
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_radix2: size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w = 1.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// One-sided harmonic amplitudes of a real periodic signal sampled over
/// exactly one period: returns X such that the bin value at index l>0 is the
/// complex amplitude A of A*e^{+j l w1 t} in x(t) = Re sum A e^{j l w1 t}.
inline std::vector<std::complex<double>> harmonic_amplitudes(const std::vector<double>& x) {
    std::vector<std::complex<double>> a(x.begin(), x.end());
    fft_radix2(a);
    const double scale = 2.0 / static_cast<double>(x.size());
    for (auto& v : a) v *= scale;
    a[0] *= 0.5;  // DC carries no conjugate twin
    return a;
}

/// Amplitude at a signed harmonic index l (sum of positive- and negative-
/// frequency conventions folded onto the stored one-sided bins).
inline std::complex<double> amplitude_at(const std::vector<std::complex<double>>& bins, long l) {
    const long n = static_cast<long>(bins.size());
    if (l >= 0) return bins[static_cast<std::size_t>(l % n)];
    return std::conj(bins[static_cast<std::size_t>((-l) % n)]);
}

}  // namespace stmcirc
