#pragma once

#include <cmath>

#include "wnct/ct/geometry.hpp"
#include "wnct/ct/radon.hpp"
#include "wnct/ct/ramp_filter.hpp"
#include "wnct/image.hpp"
#include "wnct/parallel.hpp"

namespace wnct::ct {

/// Smear filtered projections back across the grid:
/// pixel = (pi / n_angles) * sum over angles of the linearly interpolated
/// projection at the pixel's signed offset.
inline Image backproject(const Sinogram& filtered, int size, double fov = 1.0) {
    const auto& g = filtered.geometry;
    Image img(size, size, fov);
    const double inv_spacing = 1.0 / g.detector_spacing;
    const double center = 0.5 * (g.n_detectors - 1);
    parallel_for(0, size, [&](std::int64_t r) {
        const double y = img.y_of(int(r));
        for (int c = 0; c < size; ++c) {
            const double x = img.x_of(c);
            double acc = 0.0;
            for (int i = 0; i < g.n_angles; ++i) {
                const double theta = g.angle(i);
                const double s = x * std::cos(theta) + y * std::sin(theta);
                const double jf = s * inv_spacing + center;
                const int j0 = int(std::floor(jf));
                if (j0 < -1 || j0 >= g.n_detectors) continue;
                const double t = jf - j0;
                double v = 0.0;
                if (j0 >= 0) v += (1.0 - t) * filtered.at(i, j0);
                if (j0 + 1 < g.n_detectors) v += t * filtered.at(i, j0 + 1);
                acc += v;
            }
            img.at(int(r), c) = acc * M_PI / g.n_angles;
        }
    });
    return img;
}

/// Zero everything outside the inscribed disk (standard FBP convention;
/// corners are not covered by every projection).
inline void mask_reconstruction_circle(Image& img) {
    const double r2 = img.fov * img.fov;
    for (int r = 0; r < img.height; ++r) {
        const double y = img.y_of(r);
        for (int c = 0; c < img.width; ++c) {
            const double x = img.x_of(c);
            if (x * x + y * y > r2) img.at(r, c) = 0.0;
        }
    }
}

/// Filtered back projection: ramp filter + backprojection + circle mask.
inline Image fbp(const Sinogram& sino, int size, double fov = 1.0,
                 FilterWindow window = FilterWindow::ramlak, bool mask = true) {
    Image img = backproject(ramp_filter(sino, window), size, fov);
    if (mask) mask_reconstruction_circle(img);
    return img;
}

} // namespace wnct::ct
