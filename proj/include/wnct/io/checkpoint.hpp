#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/io/container.hpp"
#include "wnct/io/manifest.hpp"
#include "wnct/models/wnet.hpp"
#include "wnct/pipeline/dataset.hpp"

namespace wnct::io {

/// Checkpoint directory layout: checkpoint.json (variant spec, seed,
/// parameter table, normalization constants) + params.wnct (one rank-1
/// container holding every parameter in declared order).
template <typename T>
void save_checkpoint(const std::string& dir, const models::WNet<T>& net, std::uint64_t seed,
                     const pipeline::Normalization& norm) {
    std::filesystem::create_directories(dir);
    Json j;
    j["format"] = 1;
    j["variant"] = net.spec().name;
    j["seed"] = seed;
    j["dtype"] = sizeof(T) == 4 ? "f32" : "f64";
    Json stages = Json::array();
    for (const auto& [d, cfg] : net.spec().stages)
        stages.push_back({{"domain", models::domain_name(d)},
                          {"depth", cfg.depth},
                          {"base_filters", cfg.base_filters},
                          {"in_channels", cfg.in_channels},
                          {"out_channels", cfg.out_channels}});
    j["stages"] = stages;
    j["normalization"] = {{"lo", norm.lo}, {"hi", norm.hi}};

    TensorFile blob;
    blob.dtype = sizeof(T) == 4 ? 0 : 1;
    Json params = Json::array();
    std::uint64_t offset = 0;
    auto& self = const_cast<models::WNet<T>&>(net);
    std::size_t stage_idx = 0;
    for (auto& stage : self.stages()) {
        for (auto& p : stage.parameters()) {
            const auto& v = p.value;
            params.push_back({{"name", "stage" + std::to_string(stage_idx) + "/" + p.name},
                              {"shape", {v.n, v.c, v.h, v.w}},
                              {"offset", offset}});
            offset += v.size();
            if (blob.dtype == 0)
                for (T x : v.v) blob.f32.push_back(float(x));
            else
                for (T x : v.v) blob.f64.push_back(double(x));
        }
        ++stage_idx;
    }
    j["params"] = params;
    j["tensor_file"] = "params.wnct";
    blob.dims = {std::uint32_t(offset)};
    write_tensor(dir + "/params.wnct", blob);
    save_json(dir + "/checkpoint.json", j);
}

template <typename T>
struct LoadedCheckpoint {
    models::WNet<T> net;
    std::uint64_t seed = 0;
    pipeline::Normalization norm;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& dir) {
    require(std::filesystem::exists(dir + "/checkpoint.json"),
            "load_checkpoint: missing checkpoint.json in " + dir);
    const Json j = load_json(dir + "/checkpoint.json");
    require(j.value("format", 0) == 1, "load_checkpoint: unsupported format");

    models::WNetSpec spec;
    spec.name = j.at("variant").get<std::string>();
    for (const auto& s : j.at("stages")) {
        models::UNetConfig cfg;
        cfg.depth = s.at("depth").get<int>();
        cfg.base_filters = s.at("base_filters").get<int>();
        cfg.in_channels = s.at("in_channels").get<int>();
        cfg.out_channels = s.at("out_channels").get<int>();
        const std::string dn = s.at("domain").get<std::string>();
        require(dn == "image" || dn == "fourier", "load_checkpoint: bad stage domain");
        spec.stages.emplace_back(dn == "image" ? models::Domain::image : models::Domain::fourier,
                                 cfg);
    }

    LoadedCheckpoint<T> out;
    out.seed = j.at("seed").get<std::uint64_t>();
    out.norm.lo = j.at("normalization").at("lo").get<double>();
    out.norm.hi = j.at("normalization").at("hi").get<double>();
    out.net = models::WNet<T>(spec, out.seed);

    const TensorFile blob = read_tensor(dir + "/" + j.at("tensor_file").get<std::string>());
    const auto& params = j.at("params");
    std::size_t pi = 0;
    for (std::size_t stage_idx = 0; stage_idx < out.net.stages().size(); ++stage_idx) {
        for (auto& p : out.net.stages()[stage_idx].parameters()) {
            require(pi < params.size(), "load_checkpoint: parameter table too short");
            const auto& entry = params[pi];
            const std::string want =
                "stage" + std::to_string(stage_idx) + "/" + p.name;
            require(entry.at("name").get<std::string>() == want,
                    "load_checkpoint: parameter order mismatch at " + want);
            const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
            require(offset + p.value.size() <= blob.element_count(),
                    "load_checkpoint: parameter blob too short");
            for (std::size_t i = 0; i < p.value.size(); ++i)
                p.value.v[i] = blob.dtype == 0 ? T(blob.f32[offset + i]) : T(blob.f64[offset + i]);
            ++pi;
        }
    }
    require(pi == params.size(), "load_checkpoint: unused parameters in table");
    return out;
}

} // namespace wnct::io
