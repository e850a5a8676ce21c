#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "wnct/errors.hpp"

namespace wnct::spectral {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// In-place iterative radix-2 transform, power-of-two lengths only.
/// Forward is unnormalized; inverse carries the 1/N factor, so
/// ifft(fft(x)) == x. Orthonormal scaling is applied by the callers that
/// want it (see spectrum.hpp).
template <typename T>
void fft_inplace(std::complex<T>* a, int n, bool inverse) {
    require(is_pow2(n), "fft: length must be a power of two");
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u(a[i + k]);
                const std::complex<double> v = std::complex<double>(a[i + k + len / 2]) * w;
                a[i + k] = std::complex<T>(u + v);
                a[i + k + len / 2] = std::complex<T>(u - v);
                w *= wl;
            }
        }
    }
    if (inverse) {
        const T inv = T(1) / T(n);
        for (int i = 0; i < n; ++i) a[i] *= inv;
    }
}

template <typename T>
void fft_inplace(std::vector<std::complex<T>>& a, bool inverse) {
    fft_inplace(a.data(), int(a.size()), inverse);
}

} // namespace wnct::spectral
