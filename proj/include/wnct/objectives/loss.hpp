#pragma once

#include <cmath>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/models/wnet.hpp"
#include "wnct/nn/autodiff.hpp"

namespace wnct::objectives {

/// Perceptual training loss: alpha * K * (1 - MS-SSIM) + (1 - alpha) * L1,
/// with K selected by the domain the compared tensors live in.
struct LossConfig {
    double alpha = 0.84;
    double k_image = 1.0;
    double k_fourier = 2e6;
    int max_scales = 5;
    std::vector<double> scale_weights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    int window_taps = 11;
    double window_sigma = 1.5;
    double c1_factor = 0.01; // C1 = (c1_factor * range)^2
    double c2_factor = 0.03;
    double stability_floor = 1e-4; // lower clamp on per-scale means before pow

    void validate() const {
        require(alpha > 0.0 && alpha < 1.0, "LossConfig: alpha must be in (0,1)");
        require(k_image > 0.0 && k_fourier > 0.0, "LossConfig: K constants must be positive");
        double s = 0.0;
        for (double w : scale_weights) s += w;
        require(std::fabs(s - 1.0) < 1e-4, "LossConfig: scale weights must sum to 1");
        require(window_taps % 2 == 1, "LossConfig: window must have odd length");
    }

    double k_for(models::Domain d) const {
        return d == models::Domain::image ? k_image : k_fourier;
    }

    /// The scalar combination, exposed separately so the constants can be
    /// checked against fixed component values.
    double combine(double one_minus_msssim, double l1, models::Domain d) const {
        return alpha * k_for(d) * one_minus_msssim + (1.0 - alpha) * l1;
    }
};

template <typename T>
std::vector<T> gaussian_window(int taps, double sigma) {
    std::vector<T> w(static_cast<std::size_t>(taps));
    const double c = (taps - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < taps; ++i) {
        const double d = i - c;
        const double v = std::exp(-0.5 * d * d / (sigma * sigma));
        w[std::size_t(i)] = T(v);
        sum += v;
    }
    for (auto& x : w) x = T(double(x) / sum);
    return w;
}

/// Number of dyadic scales usable for a given plane size: the coarsest
/// plane must still fit the window. At least one scale is required.
inline int usable_scales(int h, int w, int taps, int max_scales) {
    int m = 0;
    int size = std::min(h, w);
    while (m < max_scales && size >= taps) {
        ++m;
        size /= 2;
    }
    require(m >= 1, "ms_ssim: plane smaller than the filter window");
    return m;
}

namespace detail {

template <typename T>
struct ScaleStats {
    typename nn::Tape<T>::Var cs;  // (N,C,1,1) mean contrast-structure
    typename nn::Tape<T>::Var lum; // (N,C,1,1) mean luminance (coarsest only)
};

template <typename T>
ScaleStats<T> ssim_scale_stats(nn::Tape<T>& tape, typename nn::Tape<T>::Var x,
                               typename nn::Tape<T>::Var y, const std::vector<T>& window,
                               T c1, T c2, bool want_luminance) {
    using Var = typename nn::Tape<T>::Var;
    Var mu_x = tape.blur_valid(x, window);
    Var mu_y = tape.blur_valid(y, window);
    Var mu_xx = tape.mul(mu_x, mu_x);
    Var mu_yy = tape.mul(mu_y, mu_y);
    Var mu_xy = tape.mul(mu_x, mu_y);
    Var sxx = tape.sub(tape.blur_valid(tape.mul(x, x), window), mu_xx);
    Var syy = tape.sub(tape.blur_valid(tape.mul(y, y), window), mu_yy);
    Var sxy = tape.sub(tape.blur_valid(tape.mul(x, y), window), mu_xy);
    Var cs_map = tape.div(tape.affine(tape.affine(sxy, T(2), T(0)), T(1), c2),
                          tape.affine(tape.add(sxx, syy), T(1), c2));
    ScaleStats<T> out;
    out.cs = tape.mean_hw(cs_map);
    if (want_luminance) {
        Var l_map = tape.div(tape.affine(tape.affine(mu_xy, T(2), T(0)), T(1), c1),
                             tape.affine(tape.add(mu_xx, mu_yy), T(1), c1));
        out.lum = tape.mean_hw(l_map);
    }
    return out;
}

} // namespace detail

/// Multi-scale structural similarity on the tape, differentiable end to end.
/// Contrast/structure terms at every dyadic scale (2x average pooling
/// between scales), luminance at the coarsest, combined by exponent weights;
/// each plane (batch item x channel) is scored separately and the scores are
/// averaged. `range` is the dynamic range used for the stabilizers.
template <typename T>
typename nn::Tape<T>::Var ms_ssim(nn::Tape<T>& tape, typename nn::Tape<T>::Var pred,
                                  typename nn::Tape<T>::Var target, const LossConfig& cfg,
                                  T range) {
    using Var = typename nn::Tape<T>::Var;
    const auto& pv = tape.value(pred);
    const auto& tv = tape.value(target);
    require(pv.same_shape(tv), "ms_ssim: shape mismatch " + pv.shape_str() + " vs " + tv.shape_str());
    const int scales = usable_scales(pv.h, pv.w, cfg.window_taps, cfg.max_scales);
    double wsum = 0.0;
    for (int i = 0; i < scales; ++i) wsum += cfg.scale_weights[std::size_t(i)];
    const auto window = gaussian_window<T>(cfg.window_taps, cfg.window_sigma);
    const T c1 = T(cfg.c1_factor * double(range)) * T(cfg.c1_factor * double(range));
    const T c2 = T(cfg.c2_factor * double(range)) * T(cfg.c2_factor * double(range));
    const T floor = T(cfg.stability_floor);

    Var x = pred, y = target;
    Var acc{-1};
    for (int s = 0; s < scales; ++s) {
        const bool last = (s == scales - 1);
        auto stats = detail::ssim_scale_stats(tape, x, y, window, c1, c2, last);
        const T wexp = T(cfg.scale_weights[std::size_t(s)] / wsum);
        Var term = tape.pow_const(tape.clamp_min(stats.cs, floor), wexp);
        acc = (acc.id < 0) ? term : tape.mul(acc, term);
        if (last) {
            Var lum = tape.pow_const(tape.clamp_min(stats.lum, floor), wexp);
            acc = tape.mul(acc, lum);
        } else {
            x = tape.avgpool2(x);
            y = tape.avgpool2(y);
        }
    }
    return tape.mean_all(acc);
}

template <typename T>
typename nn::Tape<T>::Var l1_loss(nn::Tape<T>& tape, typename nn::Tape<T>::Var pred,
                                  typename nn::Tape<T>::Var target) {
    const auto& pv = tape.value(pred);
    require(pv.same_shape(tape.value(target)), "l1_loss: shape mismatch");
    return tape.mean_all(tape.abs(tape.sub(pred, target)));
}

/// Dynamic range (max - min) of a tensor, used for the Fourier-domain
/// stabilizers where values are unbounded.
template <typename T>
T value_range(const nn::Tensor4<T>& t) {
    T lo = t.v[0], hi = t.v[0];
    for (T x : t.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

/// Per-stage Eq-style combined loss. Image-domain comparisons use unit
/// dynamic range (inputs are normalized); Fourier-domain ones use the
/// per-batch range of the target spectrum.
template <typename T>
typename nn::Tape<T>::Var combined_loss(nn::Tape<T>& tape, typename nn::Tape<T>::Var pred,
                                        typename nn::Tape<T>::Var target, models::Domain domain,
                                        const LossConfig& cfg) {
    using Var = typename nn::Tape<T>::Var;
    const T range = (domain == models::Domain::image) ? T(1) : value_range(tape.value(target));
    Var msssim = ms_ssim(tape, pred, target, cfg, range);
    Var one_minus = tape.affine(msssim, T(-1), T(1));
    Var l1 = l1_loss(tape, pred, target);
    const T ak = T(cfg.alpha * cfg.k_for(domain));
    return tape.add(tape.affine(one_minus, ak, T(0)), tape.affine(l1, T(1.0 - cfg.alpha), T(0)));
}

} // namespace wnct::objectives
