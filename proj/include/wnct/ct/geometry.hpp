#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/image.hpp"

namespace wnct::ct {

/// Parallel-beam acquisition layout. Angles are uniform over [0, pi); the
/// detector axis is centered on the rotation center, offsets in the same
/// length units as Image coordinates.
struct SinogramGeometry {
    int n_angles = 0;
    int n_detectors = 0;
    double detector_spacing = 0.0;

    double angle(int i) const { return M_PI * double(i) / double(n_angles); }
    double offset(int j) const { return (double(j) - 0.5 * (n_detectors - 1)) * detector_spacing; }
    double span() const { return n_detectors * detector_spacing; }

    void validate(double image_width) const {
        require(n_angles >= 1, "SinogramGeometry: n_angles must be >= 1");
        require(n_detectors >= 3, "SinogramGeometry: n_detectors must be >= 3");
        require(detector_spacing > 0.0, "SinogramGeometry: detector_spacing must be positive");
        require(span() >= std::sqrt(2.0) * image_width - 1e-12,
                "SinogramGeometry: detector span must cover the image diagonal");
    }

    /// Detector pitch of half a pixel (reconstruction quality wants the
    /// projections sampled finer than the grid), odd bin count covering the
    /// diagonal so one bin sits exactly on the rotation center.
    static SinogramGeometry for_image(const Image& img, int n_angles) {
        SinogramGeometry g;
        g.n_angles = n_angles;
        g.detector_spacing = 0.5 * img.pixel_size();
        int n = int(std::ceil(2.0 * std::sqrt(2.0) * img.width)) + 1;
        if (n % 2 == 0) ++n;
        g.n_detectors = n;
        return g;
    }
};

struct Sinogram {
    SinogramGeometry geometry;
    std::vector<double> v; // n_angles x n_detectors, row-major

    Sinogram() = default;
    explicit Sinogram(const SinogramGeometry& g)
        : geometry(g), v(std::size_t(g.n_angles) * g.n_detectors, 0.0) {}

    double& at(int angle, int det) { return v[std::size_t(angle) * geometry.n_detectors + det]; }
    double at(int angle, int det) const { return v[std::size_t(angle) * geometry.n_detectors + det]; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

/// Photon-count noise model. Counts per bin follow
/// Poisson(dose_fraction * i0_routine * exp(-p)) clamped to count_floor.
struct DoseModel {
    double i0_routine = 1e5;
    double dose_fraction = 0.25;
    std::uint64_t count_floor = 1;
    std::uint64_t rng_seed = 0;
    bool no_noise = false; // noiseless limit: returns the input unchanged

    void validate() const {
        require(i0_routine > 0.0, "DoseModel: i0_routine must be positive");
        require(dose_fraction > 0.0 && dose_fraction <= 1.0,
                "DoseModel: dose_fraction must be in (0, 1]");
        require(count_floor >= 1, "DoseModel: count_floor must be >= 1");
    }
};

} // namespace wnct::ct
