#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "wnct/ct/geometry.hpp"
#include "wnct/spectral/fft.hpp"

namespace wnct::ct {

enum class FilterWindow { ramlak, hann };

namespace detail {

/// Band-limited discrete ramp kernel, wrapped onto m taps:
/// h[0] = 1/4, h[even] = 0, h[odd] = -1/(pi^2 n^2), n the signed tap index.
inline std::vector<double> ramp_kernel_wrapped(int m) {
    std::vector<double> k(std::size_t(m), 0.0);
    k[0] = 0.25;
    for (int n = 1; n < m / 2; n += 2) {
        const double val = -1.0 / (M_PI * M_PI * double(n) * double(n));
        k[std::size_t(n)] = val;
        k[std::size_t(m - n)] = val;
    }
    return k;
}

/// Frequency response of the ramp filter over m bins: DFT of the wrapped
/// kernel with the DC bin forced to zero, optionally Hann-apodized.
inline std::vector<double> ramp_frequency_response(int m, FilterWindow window) {
    auto k = ramp_kernel_wrapped(m);
    std::vector<std::complex<double>> h(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) h[std::size_t(i)] = k[std::size_t(i)];
    spectral::fft_inplace(h, false);
    std::vector<double> resp(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) resp[std::size_t(i)] = h[std::size_t(i)].real();
    resp[0] = 0.0;
    if (window == FilterWindow::hann) {
        for (int i = 1; i < m; ++i) {
            const int js = (i <= m / 2) ? i : i - m;
            resp[std::size_t(i)] *= 0.5 * (1.0 + std::cos(2.0 * M_PI * double(js) / double(m)));
        }
    }
    return resp;
}

} // namespace detail

/// Ramp-filter every angle row along the detector axis via frequency-domain
/// multiplication over a buffer padded to at least twice the detector count
/// (next power of two), scaled by 1/spacing per the standard discrete FBP
/// weighting. The pad region replicates the row's endpoint values: for any
/// physical row (the detector span covers the object, so both ends are zero)
/// this is exactly zero padding, while a constant row stays constant around
/// the circle and is annihilated by the zeroed DC bin instead of leaving a
/// window-edge response.
inline Sinogram ramp_filter(const Sinogram& sino, FilterWindow window = FilterWindow::ramlak) {
    const auto& g = sino.geometry;
    require(g.n_detectors >= 3, "ramp_filter: need at least 3 detector bins");
    const int m = spectral::next_pow2(2 * g.n_detectors);
    const auto resp = detail::ramp_frequency_response(m, window);
    Sinogram out(g);
    std::vector<std::complex<double>> row(static_cast<std::size_t>(m));
    for (int i = 0; i < g.n_angles; ++i) {
        for (int j = 0; j < g.n_detectors; ++j) row[std::size_t(j)] = sino.at(i, j);
        const int gap = m - g.n_detectors;
        const double right = sino.at(i, g.n_detectors - 1);
        const double left = sino.at(i, 0);
        for (int j = 0; j < gap; ++j)
            row[std::size_t(g.n_detectors + j)] = (j < gap / 2) ? right : left;
        spectral::fft_inplace(row, false);
        for (int j = 0; j < m; ++j) row[std::size_t(j)] *= resp[std::size_t(j)];
        spectral::fft_inplace(row, true);
        for (int j = 0; j < g.n_detectors; ++j)
            out.at(i, j) = row[std::size_t(j)].real() / g.detector_spacing;
    }
    return out;
}

} // namespace wnct::ct
