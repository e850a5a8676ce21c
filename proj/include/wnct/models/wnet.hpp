#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/models/unet.hpp"
#include "wnct/rng.hpp"

namespace wnct::models {

enum class Domain { image, fourier };

inline const char* domain_name(Domain d) { return d == Domain::image ? "image" : "fourier"; }

/// Declarative description of a U-net/W-net variant: an ordered list of
/// stages, each a U-net operating in one domain. Consecutive stages of
/// different domains (and an input/output in the image domain) imply fixed,
/// non-trainable Fourier-transform bridges.
struct WNetSpec {
    std::string name;
    std::vector<std::pair<Domain, UNetConfig>> stages;

    void validate() const {
        require(!stages.empty() && stages.size() <= 2, "WNetSpec: 1 or 2 stages supported");
        for (const auto& [d, cfg] : stages) {
            cfg.validate();
            const int ch = (d == Domain::fourier) ? 2 : 1;
            require(cfg.in_channels == ch && cfg.out_channels == ch,
                    "WNetSpec: stage channel counts must match its domain");
        }
    }
};

/// The six named variants. Letters read left to right give the stage
/// domains: FI = Fourier stage first, then image stage.
inline WNetSpec wnet_spec(const std::string& name, int depth = 4, int base_filters = 64) {
    WNetSpec spec;
    spec.name = name;
    require(name == "I" || name == "F" || name == "II" || name == "FF" || name == "FI" ||
                name == "IF",
            "wnet_spec: unknown variant '" + name + "' (expected I, F, II, FF, FI or IF)");
    for (char c : name) {
        UNetConfig cfg;
        cfg.depth = depth;
        cfg.base_filters = base_filters;
        const Domain d = (c == 'F') ? Domain::fourier : Domain::image;
        cfg.in_channels = cfg.out_channels = (d == Domain::fourier) ? 2 : 1;
        spec.stages.emplace_back(d, cfg);
    }
    return spec;
}

/// Count from the declared shapes, without instantiating weights.
inline std::int64_t wnet_param_count(const WNetSpec& spec) {
    spec.validate();
    std::int64_t total = 0;
    for (const auto& [d, cfg] : spec.stages) total += unet_param_count(cfg);
    return total;
}

inline const std::vector<std::string>& variant_names() {
    static const std::vector<std::string> names = {"I", "F", "II", "FF", "FI", "IF"};
    return names;
}

template <typename T>
struct StageOutput {
    typename nn::Tape<T>::Var value;
    Domain domain;
};

template <typename T>
struct WNetForward {
    typename nn::Tape<T>::Var enhanced;        // image-domain output
    std::vector<StageOutput<T>> stage_outputs; // per-stage, for per-domain losses
    std::vector<std::string> trace;            // bridges and stages, in wiring order
    T max_imag_residual = 0;                   // from the final inverse bridge, if any
};

/// A composed cascade. Stages are independent U-nets (no weight sharing)
/// joined by fixed Fourier bridges that gradients flow through.
template <typename T>
class WNet {
public:
    using Var = typename nn::Tape<T>::Var;

    WNet() = default;

    WNet(const WNetSpec& spec, std::uint64_t seed) : spec_(spec) {
        spec.validate();
        for (std::size_t i = 0; i < spec.stages.size(); ++i)
            stages_.emplace_back(spec.stages[i].second, mix_seed(seed, i));
    }

    const WNetSpec& spec() const { return spec_; }
    std::vector<UNet<T>>& stages() { return stages_; }
    const std::vector<UNet<T>>& stages() const { return stages_; }

    std::int64_t param_count() const {
        std::int64_t total = 0;
        for (const auto& s : stages_) total += s.param_count();
        return total;
    }

    std::vector<nn::Parameter<T>*> parameters() {
        std::vector<nn::Parameter<T>*> out;
        for (auto& s : stages_)
            for (auto& p : s.parameters()) out.push_back(&p);
        return out;
    }

    /// Image-batch in, image-batch out, bridging into and out of the
    /// Fourier domain wherever consecutive domains differ.
    WNetForward<T> forward(nn::Tape<T>& tape, Var x, bool train = true) {
        WNetForward<T> result;
        Domain cur = Domain::image;
        Var v = x;
        for (std::size_t i = 0; i < stages_.size(); ++i) {
            const Domain d = spec_.stages[i].first;
            if (cur == Domain::image && d == Domain::fourier) {
                v = tape.image_to_spectrum(v);
                result.trace.push_back("fft2+pack");
            }
            if (cur == Domain::fourier && d == Domain::image) {
                v = tape.spectrum_to_image(v, &result.max_imag_residual);
                result.trace.push_back("unpack+ifft2");
            }
            v = stages_[i].forward(tape, v, train);
            cur = d;
            result.stage_outputs.push_back({v, d});
            result.trace.push_back(std::string("unet:") + domain_name(d));
        }
        if (cur == Domain::fourier) {
            v = tape.spectrum_to_image(v, &result.max_imag_residual);
            result.trace.push_back("unpack+ifft2");
        }
        result.enhanced = v;
        return result;
    }

private:
    WNetSpec spec_;
    std::vector<UNet<T>> stages_;
};

} // namespace wnct::models
