#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "wnct/ct/geometry.hpp"
#include "wnct/ct/radon.hpp"
#include "wnct/image.hpp"
#include "wnct/spectral/fft.hpp"
#include "wnct/spectral/spectrum.hpp"

namespace wnct::ct {

namespace detail {

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    // Flat spectra have no structure to correlate; the theorem is vacuously
    // satisfied, so report perfect agreement.
    if (saa <= 1e-18 * ma * ma * double(n) || sbb <= 1e-18 * mb * mb * double(n)) return 1.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace detail

/// Quantitative check of the central slice theorem: the 1D spectrum of the
/// projection at `angle` against the radial slice of the image's 2D spectrum
/// along the same direction. Returns the Pearson correlation of the two
/// magnitude profiles over the central half of the frequency band.
///
/// Both spectra are evaluated on a grid twice as fine as the image's
/// (projection padded 4x, image zero-padded 2x) so the radial samples land
/// on or between well-resolved bins.
inline double central_slice_check(const Image& img, double angle) {
    require(img.square(), "central_slice_check: image must be square");
    require(spectral::is_pow2(img.width), "central_slice_check: size must be a power of two");
    const int n = img.width;

    // Projection at the pixel pitch. Padded to 4n, spectrum bin k then sits
    // at frequency k / (4n * pixel), i.e. bin 2r matches radius r of the
    // padded image spectrum below.
    SinogramGeometry g;
    g.n_angles = 1;
    g.detector_spacing = img.pixel_size();
    g.n_detectors = int(std::ceil(std::sqrt(2.0) * n)) + 1;
    const int m = 4 * n;
    std::vector<std::complex<double>> row(static_cast<std::size_t>(m));
    for (int j = 0; j < g.n_detectors; ++j)
        row[std::size_t(j)] = project_ray(img, angle, g.offset(j));
    spectral::fft_inplace(row, false);

    // 2x zero-padded image spectrum: frequency step 1 / (2n * pixel).
    const int np = 2 * n;
    std::vector<double> padded(std::size_t(np) * np, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) padded[std::size_t(r) * np + c] = img.at(r, c);
    auto spec = spectral::shift(spectral::fft2_plane(padded.data(), np, np));
    std::vector<double> mag2d(spec.v.size());
    for (std::size_t i = 0; i < spec.v.size(); ++i) mag2d[i] = std::abs(spec.v[i]);

    // Radial bilinear sample of the centered magnitude map. Row index grows
    // downward while y grows upward, hence the sign flip on the sine.
    const auto sample2d = [&](double fx_bins, double fy_bins) {
        const double cf = np / 2 + fx_bins;
        const double rf = np / 2 - fy_bins;
        const int c0 = int(std::floor(cf)), r0 = int(std::floor(rf));
        const double tc = cf - c0, tr = rf - r0;
        double acc = 0.0;
        for (int dr = 0; dr <= 1; ++dr)
            for (int dc = 0; dc <= 1; ++dc) {
                const int r = r0 + dr, c = c0 + dc;
                if (r < 0 || r >= np || c < 0 || c >= np) continue;
                acc += (dr ? tr : 1.0 - tr) * (dc ? tc : 1.0 - tc) * mag2d[std::size_t(r) * np + c];
            }
        return acc;
    };

    // central 50% of the original frequency axis: radius up to n/4 of the
    // unpadded grid = n/2 bins of the padded one
    const int half_band = n / 2;
    std::vector<double> proj_mag, slice_mag;
    for (int r = 1; r <= half_band; ++r) {
        proj_mag.push_back(std::abs(row[std::size_t(2 * r)]));
        slice_mag.push_back(sample2d(r * std::cos(angle), r * std::sin(angle)));
    }
    return detail::pearson(proj_mag, slice_mag);
}

} // namespace wnct::ct
