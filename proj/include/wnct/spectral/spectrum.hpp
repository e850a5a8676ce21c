#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/image.hpp"
#include "wnct/spectral/fft.hpp"

namespace wnct::spectral {

/// Complex 2D spatial-frequency array.
///
/// Conventions, used everywhere in this project:
///  - orthonormal scaling: a factor 1/sqrt(H*W) in both directions, so
///    Parseval holds with no extra constants and spectrum magnitudes stay
///    commensurate with image magnitudes;
///  - dc_centered marks whether the quadrants have been swapped so the DC
///    bin sits at (H/2, W/2) instead of (0, 0).
template <typename T>
struct Spectrum {
    int height = 0;
    int width = 0;
    bool dc_centered = false;
    std::vector<std::complex<T>> v;

    Spectrum() = default;
    Spectrum(int h, int w) : height(h), width(w), v(std::size_t(h) * w) {}

    std::complex<T>& at(int r, int c) { return v[std::size_t(r) * width + c]; }
    std::complex<T> at(int r, int c) const { return v[std::size_t(r) * width + c]; }
};

/// Real/imaginary parts as two stacked real planes (channel 0 = real).
template <typename T>
struct ChannelPair {
    int height = 0;
    int width = 0;
    bool dc_centered = false;
    std::vector<T> v; // 2 * height * width

    ChannelPair() = default;
    ChannelPair(int h, int w) : height(h), width(w), v(2 * std::size_t(h) * w, T(0)) {}

    T& at(int ch, int r, int c) { return v[(std::size_t(ch) * height + r) * width + c]; }
    T at(int ch, int r, int c) const { return v[(std::size_t(ch) * height + r) * width + c]; }
};

namespace detail {

template <typename T>
void fft2_rows_cols(std::vector<std::complex<T>>& a, int h, int w, bool inverse) {
    for (int r = 0; r < h; ++r) fft_inplace(a.data() + std::size_t(r) * w, w, inverse);
    std::vector<std::complex<T>> col(static_cast<std::size_t>(h));
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) col[r] = a[std::size_t(r) * w + c];
        fft_inplace(col.data(), h, inverse);
        for (int r = 0; r < h; ++r) a[std::size_t(r) * w + c] = col[r];
    }
}

} // namespace detail

/// Orthonormal 2D DFT of a raw real plane (row-major h x w).
template <typename T>
Spectrum<T> fft2_plane(const T* data, int h, int w) {
    require(is_pow2(h) && is_pow2(w), "fft2: dimensions must be powers of two");
    Spectrum<T> s(h, w);
    for (std::size_t i = 0; i < std::size_t(h) * w; ++i) s.v[i] = std::complex<T>(data[i], T(0));
    detail::fft2_rows_cols(s.v, h, w, false);
    const T scale = T(1) / std::sqrt(T(h) * T(w));
    for (auto& z : s.v) z *= scale;
    return s;
}

/// Orthonormal inverse; writes the real part into out and returns the
/// largest |imag| encountered (a diagnostic: large values mean the spectrum
/// was far from Hermitian-symmetric).
template <typename T>
T ifft2_plane(const Spectrum<T>& s, T* out) {
    require(!s.dc_centered, "ifft2: spectrum must be unshifted first");
    std::vector<std::complex<T>> a = s.v;
    detail::fft2_rows_cols(a, s.height, s.width, true);
    const T scale = std::sqrt(T(s.height) * T(s.width));
    T max_imag = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::complex<T> z = a[i] * scale;
        out[i] = z.real();
        max_imag = std::max(max_imag, std::abs(z.imag()));
    }
    return max_imag;
}

inline Spectrum<double> fft2(const Image& img) {
    require(img.square(), "fft2: image must be square");
    return fft2_plane(img.v.data(), img.height, img.width);
}

/// Inverse transform to an image; optionally reports the residual imaginary
/// magnitude (expected to be ~0 only for Hermitian-symmetric spectra).
inline Image ifft2(const Spectrum<double>& s, double fov = 1.0, double* max_imag = nullptr) {
    Image img(s.height, s.width, fov);
    double resid = ifft2_plane(s, img.v.data());
    if (max_imag) *max_imag = resid;
    return img;
}

/// Quadrant swap moving DC to the center (its own inverse for even sizes).
template <typename T>
Spectrum<T> shift(const Spectrum<T>& s) {
    require(s.height % 2 == 0 && s.width % 2 == 0, "shift: requires even dimensions");
    Spectrum<T> out(s.height, s.width);
    out.dc_centered = !s.dc_centered;
    const int hh = s.height / 2, hw = s.width / 2;
    for (int r = 0; r < s.height; ++r) {
        const int rr = (r + hh) % s.height;
        for (int c = 0; c < s.width; ++c) out.at(rr, (c + hw) % s.width) = s.at(r, c);
    }
    return out;
}

template <typename T>
ChannelPair<T> pack(const Spectrum<T>& s) {
    ChannelPair<T> p(s.height, s.width);
    p.dc_centered = s.dc_centered;
    const std::size_t n = std::size_t(s.height) * s.width;
    for (std::size_t i = 0; i < n; ++i) {
        p.v[i] = s.v[i].real();
        p.v[n + i] = s.v[i].imag();
    }
    return p;
}

template <typename T>
Spectrum<T> unpack(const ChannelPair<T>& p) {
    require(p.v.size() == 2 * std::size_t(p.height) * p.width,
            "unpack: channel pair must hold exactly 2 channels");
    Spectrum<T> s(p.height, p.width);
    s.dc_centered = p.dc_centered;
    const std::size_t n = std::size_t(p.height) * p.width;
    for (std::size_t i = 0; i < n; ++i) s.v[i] = std::complex<T>(p.v[i], p.v[n + i]);
    return s;
}

/// Unpack from a raw channel-major buffer; rejects anything but 2 channels.
template <typename T>
Spectrum<T> unpack_planes(const T* data, int channels, int h, int w, bool dc_centered) {
    require(channels == 2, "unpack: expected exactly 2 channels (real, imaginary)");
    ChannelPair<T> p(h, w);
    p.dc_centered = dc_centered;
    std::copy(data, data + 2 * std::size_t(h) * w, p.v.begin());
    return unpack(p);
}

} // namespace wnct::spectral
