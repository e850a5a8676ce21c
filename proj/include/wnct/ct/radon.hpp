#pragma once

#include <algorithm>
#include <cmath>

#include "wnct/ct/geometry.hpp"
#include "wnct/image.hpp"
#include "wnct/parallel.hpp"

namespace wnct::ct {

namespace detail {

/// Clip the line p0 + t*d to the square [-half, half]^2. Returns false when
/// the line misses the square.
inline bool clip_to_square(double p0x, double p0y, double dx, double dy, double half,
                           double& t0, double& t1) {
    t0 = -1e300;
    t1 = 1e300;
    const double px[2] = {p0x, p0y};
    const double dd[2] = {dx, dy};
    for (int axis = 0; axis < 2; ++axis) {
        if (std::fabs(dd[axis]) < 1e-15) {
            if (px[axis] < -half || px[axis] > half) return false;
            continue;
        }
        double ta = (-half - px[axis]) / dd[axis];
        double tb = (half - px[axis]) / dd[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t1 > t0;
}

} // namespace detail

/// Line integral of the image along the ray at the given angle and signed
/// detector offset. Midpoint rule with bilinear sampling; step_px is the
/// sample step in pixel units.
inline double project_ray(const Image& img, double theta, double s, double step_px = 0.5) {
    const double c = std::cos(theta), sn = std::sin(theta);
    // Ray passes through s * (cos, sin) with direction (-sin, cos).
    const double p0x = s * c, p0y = s * sn;
    const double dx = -sn, dy = c;
    double t0, t1;
    if (!detail::clip_to_square(p0x, p0y, dx, dy, img.fov, t0, t1)) return 0.0;
    const double step = step_px * img.pixel_size();
    const int m = std::max(1, int(std::ceil((t1 - t0) / step)));
    const double dt = (t1 - t0) / m;
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
        const double t = t0 + (k + 0.5) * dt;
        acc += img.sample(p0x + t * dx, p0y + t * dy);
    }
    return acc * dt;
}

/// Parallel-beam forward projection.
inline Sinogram radon(const Image& img, const SinogramGeometry& geom, double step_px = 0.5) {
    require(img.square(), "radon: image must be square");
    geom.validate(2.0 * img.fov);
    Sinogram sino(geom);
    parallel_for(0, geom.n_angles, [&](std::int64_t i) {
        const double theta = geom.angle(int(i));
        for (int j = 0; j < geom.n_detectors; ++j)
            sino.at(int(i), j) = project_ray(img, theta, geom.offset(j), step_px);
    });
    return sino;
}

} // namespace wnct::ct
