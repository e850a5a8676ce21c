#pragma once

#include <cmath>

#include "wnct/nn/tensor.hpp"
#include "wnct/rng.hpp"

namespace wnct::nn {

/// He-style fan-in initialization: zero-mean normal with std sqrt(2/fan_in).
template <typename T>
Tensor4<T> init_conv_weights(int out_ch, int in_ch, int k, Rng& rng) {
    Tensor4<T> w(out_ch, in_ch, k, k);
    const double stddev = std::sqrt(2.0 / (double(in_ch) * k * k));
    for (auto& x : w.v) x = T(stddev * rng.normal());
    return w;
}

/// Transposed-conv weights, stored (in_ch, out_ch, k, k); fan_in = in_ch*k*k.
template <typename T>
Tensor4<T> init_tconv_weights(int in_ch, int out_ch, int k, Rng& rng) {
    Tensor4<T> w(in_ch, out_ch, k, k);
    const double stddev = std::sqrt(2.0 / (double(in_ch) * k * k));
    for (auto& x : w.v) x = T(stddev * rng.normal());
    return w;
}

template <typename T>
Tensor4<T> init_bias(int out_ch) {
    return Tensor4<T>(1, out_ch, 1, 1); // zeros
}

} // namespace wnct::nn
