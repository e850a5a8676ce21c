#pragma once

#include <cmath>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/image.hpp"
#include "wnct/rng.hpp"

namespace wnct::ct {

/// Additive ellipse, positioned in units of the image fov: a center of
/// (0.5, 0) sits halfway to the right edge regardless of the fov value.
struct Ellipse {
    double cx = 0.0, cy = 0.0; // center, [-1, 1]
    double a = 0.0, b = 0.0;   // semi-axes, fov units
    double phi = 0.0;          // rotation, radians
    double value = 0.0;        // additive attenuation
};

/// Small bright disk standing in for a contrast-filled vessel.
struct Vessel {
    double cx = 0.0, cy = 0.0;
    double radius = 0.0;
    double value = 0.0;
};

struct PhantomSpec {
    std::vector<Ellipse> ellipses;
    std::vector<Vessel> vessels;

    void validate() const {
        require(!ellipses.empty(), "PhantomSpec: needs at least one ellipse");
        for (const auto& e : ellipses)
            require(e.a > 0.0 && e.b > 0.0, "PhantomSpec: semi-axes must be positive");
        for (const auto& n : vessels)
            require(n.radius > 0.0, "PhantomSpec: vessel radius must be positive");
    }
};

inline double phantom_value_at(const PhantomSpec& spec, double x, double y) {
    double acc = 0.0;
    for (const auto& e : spec.ellipses) {
        const double dx = x - e.cx;
        const double dy = y - e.cy;
        const double c = std::cos(e.phi), s = std::sin(e.phi);
        const double u = dx * c + dy * s;
        const double w = -dx * s + dy * c;
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) acc += e.value;
    }
    for (const auto& n : spec.vessels) {
        const double dx = x - n.cx;
        const double dy = y - n.cy;
        if (dx * dx + dy * dy <= n.radius * n.radius) acc += n.value;
    }
    return acc;
}

/// Rasterize the spec onto a size x size grid. supersample > 1 area-averages
/// that many sub-samples per pixel axis, giving fractional edge pixels.
inline Image make_phantom(const PhantomSpec& spec, int size, double fov = 1.0, int supersample = 4) {
    spec.validate();
    require(size >= 16, "make_phantom: size must be >= 16");
    require(supersample >= 1, "make_phantom: supersample must be >= 1");
    Image img(size, size, fov);
    const double step = 1.0 / supersample;
    const double norm = 1.0 / (supersample * supersample);
    const double px = img.pixel_size() / fov; // pixel size in spec units
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double x0 = img.x_of(c) / fov;
            const double y0 = img.y_of(r) / fov;
            double acc = 0.0;
            for (int sr = 0; sr < supersample; ++sr)
                for (int sc = 0; sc < supersample; ++sc) {
                    const double x = x0 + ((sc + 0.5) * step - 0.5) * px;
                    const double y = y0 + ((sr + 0.5) * step - 0.5) * px;
                    acc += phantom_value_at(spec, x, y);
                }
            const double val = acc * norm;
            require(val >= -1e-9, "make_phantom: summed attenuation went negative");
            img.at(r, c) = val;
        }
    }
    return img;
}

/// Canonical head phantom ellipse table (intensity, a, b, x0, y0, phi deg).
inline PhantomSpec shepp_logan() {
    static const double tbl[10][6] = {
        {2.0, .69, .92, 0.0, 0.0, 0.0},      {-.98, .6624, .8740, 0.0, -.0184, 0.0},
        {-.02, .1100, .3100, .22, 0.0, -18}, {-.02, .1600, .4100, -.22, 0.0, 18},
        {.01, .2100, .2500, 0.0, .35, 0.0},  {.01, .0460, .0460, 0.0, .1, 0.0},
        {.02, .0460, .0460, 0.0, -.1, 0.0},  {.01, .0460, .0230, -.08, -.605, 0.0},
        {.01, .0230, .0230, 0.0, -.606, 0.0},{.01, .0230, .0460, .06, -.605, 0.0}};
    PhantomSpec spec;
    for (const auto& row : tbl) {
        Ellipse e;
        e.value = row[0];
        e.a = row[1];
        e.b = row[2];
        e.cx = row[3];
        e.cy = row[4];
        e.phi = row[5] * M_PI / 180.0;
        spec.ellipses.push_back(e);
    }
    return spec;
}

/// Contrast-enhanced-abdomen-like phantom: body outline, a few soft-tissue
/// organs, a spine-like dense ellipse, and bright vessel disks.
inline PhantomSpec random_abdomen(std::uint64_t seed) {
    Rng rng(seed);
    PhantomSpec spec;

    Ellipse body;
    body.a = rng.uniform(0.78, 0.90);
    body.b = rng.uniform(0.58, 0.72);
    body.cx = rng.uniform(-0.03, 0.03);
    body.cy = rng.uniform(-0.03, 0.03);
    body.phi = rng.uniform(-0.08, 0.08);
    body.value = 0.22;
    spec.ellipses.push_back(body);

    Ellipse interior = body;
    interior.a *= 0.92;
    interior.b *= 0.90;
    interior.value = 0.08;
    spec.ellipses.push_back(interior);

    const int organs = 2 + int(rng.uniform_int(3));
    for (int i = 0; i < organs; ++i) {
        Ellipse o;
        o.a = rng.uniform(0.12, 0.34);
        o.b = rng.uniform(0.10, 0.26);
        o.cx = rng.uniform(-0.45, 0.45);
        o.cy = rng.uniform(-0.35, 0.35);
        o.phi = rng.uniform(0.0, M_PI);
        o.value = rng.uniform(-0.05, 0.12);
        if (o.value < 0.0) {
            // cavities must stay strictly inside the +0.08 interior region
            // (with slack for per-slice jitter) or the sum could go negative
            o.a = rng.uniform(0.06, 0.14);
            o.b = rng.uniform(0.06, 0.14);
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            const double rad = 0.5 * std::sqrt(rng.uniform());
            o.cx = interior.cx + interior.a * rad * std::cos(ang);
            o.cy = interior.cy + interior.b * rad * std::sin(ang);
        }
        spec.ellipses.push_back(o);
    }

    Ellipse spine;
    spine.a = rng.uniform(0.07, 0.10);
    spine.b = rng.uniform(0.09, 0.12);
    spine.cx = rng.uniform(-0.05, 0.05);
    spine.cy = rng.uniform(-0.52, -0.42);
    spine.value = 0.55;
    spec.ellipses.push_back(spine);

    const int vessels = 4 + int(rng.uniform_int(5));
    for (int i = 0; i < vessels; ++i) {
        Vessel n;
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double rad = rng.uniform(0.05, 0.55);
        n.cx = body.cx + std::cos(ang) * rad * body.a;
        n.cy = body.cy + std::sin(ang) * rad * body.b;
        n.radius = rng.uniform(0.02, 0.055);
        n.value = rng.uniform(0.25, 0.45);
        spec.vessels.push_back(n);
    }
    return spec;
}

/// Smooth per-slice variation of a base spec, imitating anatomy drifting
/// along the scan axis. t in [0, 1]; t = 0 reproduces the base spec closely.
inline PhantomSpec slice_variant(const PhantomSpec& base, double t, std::uint64_t seed) {
    Rng rng(seed);
    PhantomSpec out = base;
    for (std::size_t i = 0; i < out.ellipses.size(); ++i) {
        auto& e = out.ellipses[i];
        const double ph = rng.uniform(0.0, 2.0 * M_PI);
        const double amp = (i < 2) ? 0.03 : 0.08; // body outline varies less
        const double s = 1.0 + amp * std::sin(2.0 * M_PI * t + ph);
        e.a *= s;
        e.b *= 2.0 - s;
        if (i >= 2) {
            e.cx += 0.04 * std::sin(2.0 * M_PI * t + rng.uniform(0.0, 6.28));
            e.cy += 0.04 * std::cos(2.0 * M_PI * t + rng.uniform(0.0, 6.28));
        }
    }
    for (auto& n : out.vessels) {
        n.cx += 0.05 * std::sin(2.0 * M_PI * t + rng.uniform(0.0, 6.28));
        n.cy += 0.05 * std::cos(2.0 * M_PI * t + rng.uniform(0.0, 6.28));
        n.radius *= 1.0 + 0.15 * std::sin(2.0 * M_PI * t + rng.uniform(0.0, 6.28));
    }
    return out;
}

} // namespace wnct::ct
