#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "wnct/errors.hpp"

namespace wnct::nn {

/// Dense NCHW tensor.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(std::size_t(n_) * c_ * h_ * w_, T(0)) {
        require(n_ >= 1 && c_ >= 1 && h_ >= 1 && w_ >= 1, "Tensor4: all dims must be >= 1");
    }

    std::size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    std::size_t idx(int in, int ic, int iy, int ix) const {
        return ((std::size_t(in) * c + ic) * h + iy) * w + ix;
    }
    T& at(int in, int ic, int iy, int ix) { return v[idx(in, ic, iy, ix)]; }
    T at(int in, int ic, int iy, int ix) const { return v[idx(in, ic, iy, ix)]; }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(double(x))) return false;
        return true;
    }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

/// Named trainable tensor with its gradient accumulator.
template <typename T>
struct Parameter {
    std::string name;
    Tensor4<T> value;
    Tensor4<T> grad;

    Parameter() = default;
    Parameter(std::string name_, Tensor4<T> value_)
        : name(std::move(name_)), value(std::move(value_)),
          grad(value.n, value.c, value.h, value.w) {}

    void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
Tensor4<T> tensor_cast(const Tensor4<double>& src) {
    Tensor4<T> out(src.n, src.c, src.h, src.w);
    for (std::size_t i = 0; i < src.size(); ++i) out.v[i] = T(src.v[i]);
    return out;
}

} // namespace wnct::nn
