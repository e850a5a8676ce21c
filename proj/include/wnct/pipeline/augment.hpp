#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/nn/tensor.hpp"
#include "wnct/rng.hpp"

namespace wnct::pipeline {

struct AugmentConfig {
    bool enabled = true;
    int max_translate_px = 16;   // uniform integer shift, zero fill
    double max_rotate_deg = 10.0; // uniform, bilinear resampling
    bool reflect_horizontal = true; // each with probability 0.5
    bool reflect_vertical = true;
};

/// One sampled geometric transform. Flips are exact index permutations;
/// rotation/translation resample bilinearly with zero fill, and are skipped
/// entirely when both are zero so the no-op case stays bitwise exact.
struct SampledTransform {
    bool flip_h = false;
    bool flip_v = false;
    int tx = 0;
    int ty = 0;
    double angle_rad = 0.0;
};

inline SampledTransform sample_transform(const AugmentConfig& cfg, Rng& rng) {
    SampledTransform t;
    if (!cfg.enabled) return t;
    t.flip_h = cfg.reflect_horizontal && rng.bernoulli(0.5);
    t.flip_v = cfg.reflect_vertical && rng.bernoulli(0.5);
    if (cfg.max_translate_px > 0) {
        t.tx = int(rng.uniform_int(2 * std::uint64_t(cfg.max_translate_px) + 1)) - cfg.max_translate_px;
        t.ty = int(rng.uniform_int(2 * std::uint64_t(cfg.max_translate_px) + 1)) - cfg.max_translate_px;
    }
    if (cfg.max_rotate_deg > 0.0)
        t.angle_rad = rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg) * M_PI / 180.0;
    return t;
}

/// Apply the transform to one plane (h x w), in place via copy.
template <typename T>
void apply_transform_plane(const SampledTransform& t, T* data, int h, int w) {
    std::vector<T> buf(data, data + std::size_t(h) * w);
    auto src_at = [&](int r, int c) -> T { return buf[std::size_t(r) * w + c]; };

    if (t.flip_h || t.flip_v) {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const int sr = t.flip_v ? h - 1 - r : r;
                const int sc = t.flip_h ? w - 1 - c : c;
                data[std::size_t(r) * w + c] = src_at(sr, sc);
            }
        std::copy(data, data + std::size_t(h) * w, buf.begin());
    }
    if (t.tx == 0 && t.ty == 0 && t.angle_rad == 0.0) return;

    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    const double ca = std::cos(t.angle_rad), sa = std::sin(t.angle_rad);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            // inverse map: undo translation, then rotation about the center
            const double xd = (c - t.tx) - cx;
            const double yd = (r - t.ty) - cy;
            const double sx = ca * xd + sa * yd + cx;
            const double sy = -sa * xd + ca * yd + cy;
            const int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            double acc = 0.0;
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx) {
                    const int yy = y0 + dy, xx = x0 + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    acc += (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx) * double(src_at(yy, xx));
                }
            data[std::size_t(r) * w + c] = T(acc);
        }
}

/// Augment an (input, target) pair with one identical transform,
/// deterministic for a fixed (seed, sample index).
template <typename T>
SampledTransform augment_pair(const AugmentConfig& cfg, std::uint64_t seed, std::uint64_t index,
                              nn::Tensor4<T>& input, nn::Tensor4<T>& target) {
    require(input.same_shape(target), "augment_pair: pair members must share a shape");
    Rng rng(mix_seed(seed, index));
    const SampledTransform t = sample_transform(cfg, rng);
    for (int in = 0; in < input.n; ++in)
        for (int ch = 0; ch < input.c; ++ch) {
            apply_transform_plane(t, input.data() + input.idx(in, ch, 0, 0), input.h, input.w);
            apply_transform_plane(t, target.data() + target.idx(in, ch, 0, 0), target.h, target.w);
        }
    return t;
}

} // namespace wnct::pipeline
