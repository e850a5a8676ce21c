#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "wnct/errors.hpp"

namespace wnct {

/// 2D attenuation grid. The imaged square spans [-fov, fov] in both axes,
/// x increasing with column index and y increasing upward (row 0 on top).
/// Pixel (r, c) is centered at x = (c + 0.5) * dx - fov, y = fov - (r + 0.5) * dx
/// with dx = 2 * fov / width.
struct Image {
    int height = 0;
    int width = 0;
    double fov = 1.0;
    std::vector<double> v;

    Image() = default;
    Image(int h, int w, double fov_ = 1.0) : height(h), width(w), fov(fov_), v(std::size_t(h) * w, 0.0) {}

    double& at(int r, int c) { return v[std::size_t(r) * width + c]; }
    double at(int r, int c) const { return v[std::size_t(r) * width + c]; }

    bool square() const { return height == width && height > 0; }
    double pixel_size() const { return 2.0 * fov / width; }

    double x_of(int c) const { return (c + 0.5) * pixel_size() - fov; }
    double y_of(int r) const { return fov - (r + 0.5) * pixel_size(); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    /// Bilinear sample at world coordinates; zero outside the grid.
    double sample(double x, double y) const {
        const double dx = pixel_size();
        const double cf = (x + fov) / dx - 0.5;
        const double rf = (fov - y) / dx - 0.5;
        const int c0 = int(std::floor(cf));
        const int r0 = int(std::floor(rf));
        const double tc = cf - c0;
        const double tr = rf - r0;
        double acc = 0.0;
        for (int dr = 0; dr <= 1; ++dr) {
            const int r = r0 + dr;
            if (r < 0 || r >= height) continue;
            const double wr = dr ? tr : 1.0 - tr;
            for (int dc = 0; dc <= 1; ++dc) {
                const int c = c0 + dc;
                if (c < 0 || c >= width) continue;
                const double wc = dc ? tc : 1.0 - tc;
                acc += wr * wc * at(r, c);
            }
        }
        return acc;
    }
};

/// 90-degree counter-clockwise rotation (exact pixel permutation).
inline Image rot90(const Image& img) {
    require(img.square(), "rot90: image must be square");
    Image out(img.height, img.width, img.fov);
    const int n = img.height;
    // (x, y) -> (-y, x): out(r, c) takes the value at the source point whose
    // rotation lands on (r, c).
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out.at(r, c) = img.at(c, n - 1 - r);
    return out;
}

inline double image_l2(const Image& a) {
    double s = 0.0;
    for (double x : a.v) s += x * x;
    return std::sqrt(s);
}

} // namespace wnct
