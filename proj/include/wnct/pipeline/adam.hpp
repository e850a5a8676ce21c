#pragma once

#include <cmath>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/nn/tensor.hpp"

namespace wnct::pipeline {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers, one pair per parameter tensor.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;

    void ensure(const std::vector<nn::Parameter<T>*>& params) {
        if (!m.empty()) return;
        for (const auto* p : params) {
            m.emplace_back(p->value.size(), T(0));
            v.emplace_back(p->value.size(), T(0));
        }
    }
};

/// One bias-corrected Adam update; t is the 1-based step counter.
template <typename T>
void adam_step(std::vector<nn::Parameter<T>*>& params, AdamState<T>& state, std::int64_t t,
               const AdamConfig& cfg) {
    require(t >= 1, "adam_step: step counter must be >= 1");
    state.ensure(params);
    require(state.m.size() == params.size(), "adam_step: state/parameter mismatch");
    const T b1 = T(cfg.beta1), b2 = T(cfg.beta2);
    const T bc1 = T(1.0 - std::pow(cfg.beta1, double(t)));
    const T bc2 = T(1.0 - std::pow(cfg.beta2, double(t)));
    const T lr = T(cfg.lr), eps = T(cfg.eps);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = *params[pi];
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const T g = p.grad.v[i];
            m[i] = b1 * m[i] + (T(1) - b1) * g;
            v[i] = b2 * v[i] + (T(1) - b2) * g * g;
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            p.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

} // namespace wnct::pipeline
