#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/nn/autodiff.hpp"
#include "wnct/nn/init.hpp"
#include "wnct/nn/tensor.hpp"
#include "wnct/rng.hpp"

namespace wnct::models {

/// Encoder-decoder layout. `depth` counts encoder levels including the
/// bottleneck, so depth d means d-1 poolings and spatial sizes must divide
/// 2^(d-1). Channels double per level starting at base_filters; two 3x3
/// same-padded convolutions per level; 2x2 transposed-conv upsampling with
/// skip concatenation; a final 1x1 convolution down to out_channels.
struct UNetConfig {
    int depth = 4;
    int base_filters = 64;
    int in_channels = 1;
    int out_channels = 1;

    void validate() const {
        require(depth >= 1, "UNetConfig: depth must be >= 1");
        require(base_filters >= 1, "UNetConfig: base_filters must be >= 1");
        require(in_channels >= 1 && out_channels >= 1, "UNetConfig: bad channel counts");
    }

    int level_channels(int level) const { return base_filters << level; }
    int divisor() const { return 1 << (depth - 1); }

    /// Closed-form trainable scalar count: k*k*cin*cout + cout per layer.
    std::int64_t expected_param_count() const {
        auto conv = [](std::int64_t k, std::int64_t cin, std::int64_t cout) {
            return k * k * cin * cout + cout;
        };
        std::int64_t total = 0;
        for (int l = 0; l < depth; ++l) {
            const std::int64_t cin = (l == 0) ? in_channels : level_channels(l - 1);
            const std::int64_t ch = level_channels(l);
            total += conv(3, cin, ch) + conv(3, ch, ch);
        }
        for (int l = depth - 2; l >= 0; --l) {
            const std::int64_t ch = level_channels(l);
            total += conv(2, level_channels(l + 1), ch); // transposed conv
            total += conv(3, 2 * ch, ch) + conv(3, ch, ch);
        }
        total += conv(1, base_filters, out_channels);
        return total;
    }
};

enum class ParamKind { conv_weight, tconv_weight, bias };

struct ParamShape {
    std::string name;
    ParamKind kind;
    int n, c, h, w;

    std::int64_t count() const { return std::int64_t(n) * c * h * w; }
};

/// The parameter table the builder instantiates, in declared order. Counting
/// from these shapes and counting a built model are two routes through the
/// same structure.
inline std::vector<ParamShape> unet_parameter_shapes(const UNetConfig& cfg) {
    cfg.validate();
    std::vector<ParamShape> out;
    const auto conv = [&](const std::string& name, int cin, int cout, int k) {
        out.push_back({name + ".w", ParamKind::conv_weight, cout, cin, k, k});
        out.push_back({name + ".b", ParamKind::bias, 1, cout, 1, 1});
    };
    for (int l = 0; l < cfg.depth; ++l) {
        const int cin = (l == 0) ? cfg.in_channels : cfg.level_channels(l - 1);
        const int ch = cfg.level_channels(l);
        conv("enc" + std::to_string(l) + ".conv0", cin, ch, 3);
        conv("enc" + std::to_string(l) + ".conv1", ch, ch, 3);
    }
    for (int l = cfg.depth - 2; l >= 0; --l) {
        const int ch = cfg.level_channels(l);
        out.push_back({"dec" + std::to_string(l) + ".up.w", ParamKind::tconv_weight,
                       cfg.level_channels(l + 1), ch, 2, 2});
        out.push_back({"dec" + std::to_string(l) + ".up.b", ParamKind::bias, 1, ch, 1, 1});
        conv("dec" + std::to_string(l) + ".conv0", 2 * ch, ch, 3);
        conv("dec" + std::to_string(l) + ".conv1", ch, ch, 3);
    }
    conv("head", cfg.base_filters, cfg.out_channels, 1);
    return out;
}

inline std::int64_t unet_param_count(const UNetConfig& cfg) {
    std::int64_t total = 0;
    for (const auto& s : unet_parameter_shapes(cfg)) total += s.count();
    return total;
}

template <typename T>
class UNet {
public:
    using Var = typename nn::Tape<T>::Var;

    UNet() = default;

    UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        Rng rng(seed);
        for (const auto& shape : unet_parameter_shapes(cfg)) {
            switch (shape.kind) {
                case ParamKind::conv_weight:
                    params_.emplace_back(shape.name,
                                         nn::init_conv_weights<T>(shape.n, shape.c, shape.h, rng));
                    break;
                case ParamKind::tconv_weight:
                    params_.emplace_back(shape.name,
                                         nn::init_tconv_weights<T>(shape.n, shape.c, shape.h, rng));
                    break;
                case ParamKind::bias:
                    params_.emplace_back(shape.name, nn::init_bias<T>(shape.c));
                    break;
            }
        }
    }

    const UNetConfig& config() const { return cfg_; }
    std::vector<nn::Parameter<T>>& parameters() { return params_; }
    const std::vector<nn::Parameter<T>>& parameters() const { return params_; }

    std::int64_t param_count() const {
        std::int64_t total = 0;
        for (const auto& p : params_) total += std::int64_t(p.value.size());
        return total;
    }

    /// Build the forward graph. `train` controls whether parameter leaves
    /// track gradients; pass false for inference to skip all backward state.
    Var forward(nn::Tape<T>& tape, Var x, bool train = true) {
        const auto& xv = tape.value(x);
        require(xv.c == cfg_.in_channels, "UNet: input has wrong channel count");
        require(xv.h % cfg_.divisor() == 0 && xv.w % cfg_.divisor() == 0,
                "UNet: spatial size must be divisible by 2^(depth-1)");
        std::size_t pi = 0;
        auto next_pair = [&](nn::Tape<T>& t) {
            Var w = train ? t.param(params_[pi]) : t.leaf(params_[pi].value, false);
            Var b = train ? t.param(params_[pi + 1]) : t.leaf(params_[pi + 1].value, false);
            pi += 2;
            return std::pair<Var, Var>(w, b);
        };

        std::vector<Var> skips;
        Var cur = x;
        for (int l = 0; l < cfg_.depth; ++l) {
            auto [w0, b0] = next_pair(tape);
            cur = tape.relu(tape.conv2d(cur, w0, b0));
            auto [w1, b1] = next_pair(tape);
            cur = tape.relu(tape.conv2d(cur, w1, b1));
            if (l < cfg_.depth - 1) {
                skips.push_back(cur);
                cur = tape.maxpool2(cur);
            }
        }
        for (int l = cfg_.depth - 2; l >= 0; --l) {
            auto [wu, bu] = next_pair(tape);
            cur = tape.transpose_conv2d(cur, wu, bu);
            cur = tape.concat_channels(skips[std::size_t(l)], cur);
            auto [w0, b0] = next_pair(tape);
            cur = tape.relu(tape.conv2d(cur, w0, b0));
            auto [w1, b1] = next_pair(tape);
            cur = tape.relu(tape.conv2d(cur, w1, b1));
        }
        auto [wh, bh] = next_pair(tape);
        cur = tape.conv2d(cur, wh, bh); // linear head
        return cur;
    }

private:
    UNetConfig cfg_;
    std::vector<nn::Parameter<T>> params_;
};

} // namespace wnct::models
