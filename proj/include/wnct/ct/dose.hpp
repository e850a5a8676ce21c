#pragma once

#include <cmath>

#include "wnct/ct/backproject.hpp"
#include "wnct/ct/geometry.hpp"
#include "wnct/ct/phantom.hpp"
#include "wnct/ct/radon.hpp"
#include "wnct/errors.hpp"
#include "wnct/rng.hpp"

namespace wnct::ct {

/// Insert photon-count noise: N ~ Poisson(fraction * i0 * exp(-p)) per bin,
/// clamped to count_floor, then p' = -ln(N / (fraction * i0)).
inline Sinogram simulate_dose(const Sinogram& sino, const DoseModel& dose) {
    dose.validate();
    for (double p : sino.v)
        require(p >= -1e-9, "simulate_dose: negative line integral");
    if (dose.no_noise) return sino;
    Sinogram out(sino.geometry);
    Rng rng(dose.rng_seed);
    const double i0 = dose.dose_fraction * dose.i0_routine;
    for (std::size_t i = 0; i < sino.v.size(); ++i) {
        const double lambda = i0 * std::exp(-sino.v[i]);
        std::uint64_t n = rng.poisson(lambda);
        if (n < dose.count_floor) n = dose.count_floor;
        out.v[i] = -std::log(double(n) / i0);
    }
    return out;
}

struct ImagePair {
    Image ldct;
    Image rdct;
    Image truth;
};

/// Paired acquisition of one phantom slice: one clean forward projection,
/// two independent noise draws (full dose for the routine image, the model's
/// dose_fraction for the low-dose one), FBP of each.
inline ImagePair make_pair(const PhantomSpec& spec, const SinogramGeometry& geom,
                           const DoseModel& dose, int size, double fov = 1.0,
                           FilterWindow window = FilterWindow::ramlak) {
    ImagePair pair;
    pair.truth = make_phantom(spec, size, fov);
    const Sinogram clean = radon(pair.truth, geom);

    DoseModel routine = dose;
    routine.dose_fraction = 1.0;
    routine.rng_seed = mix_seed(dose.rng_seed, 0x7d0);
    DoseModel low = dose;
    low.rng_seed = mix_seed(dose.rng_seed, 0x1f4);

    pair.rdct = fbp(simulate_dose(clean, routine), size, fov, window);
    pair.ldct = fbp(simulate_dose(clean, low), size, fov, window);
    return pair;
}

} // namespace wnct::ct
