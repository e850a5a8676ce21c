#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "wnct/ct/geometry.hpp"
#include "wnct/ct/phantom.hpp"
#include "wnct/errors.hpp"

namespace wnct::io {

using Json = nlohmann::ordered_json;

inline Json load_json(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open " + path);
    Json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw data_error("failed to parse " + path + ": " + e.what());
    }
    return j;
}

inline void save_json(const std::string& path, const Json& j) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), "cannot open " + path + " for writing");
    f << j.dump(2) << "\n";
    require(f.good(), "write failed for " + path);
}

inline Json phantom_to_json(const ct::PhantomSpec& spec) {
    Json j;
    j["ellipses"] = Json::array();
    for (const auto& e : spec.ellipses)
        j["ellipses"].push_back({{"cx", e.cx},
                                 {"cy", e.cy},
                                 {"a", e.a},
                                 {"b", e.b},
                                 {"phi", e.phi},
                                 {"value", e.value}});
    j["vessels"] = Json::array();
    for (const auto& n : spec.vessels)
        j["vessels"].push_back(
            {{"cx", n.cx}, {"cy", n.cy}, {"radius", n.radius}, {"value", n.value}});
    return j;
}

inline ct::PhantomSpec phantom_from_json(const Json& j) {
    ct::PhantomSpec spec;
    require(j.contains("ellipses"), "phantom spec: missing 'ellipses'");
    for (const auto& e : j.at("ellipses")) {
        ct::Ellipse el;
        el.cx = e.at("cx").get<double>();
        el.cy = e.at("cy").get<double>();
        el.a = e.at("a").get<double>();
        el.b = e.at("b").get<double>();
        el.phi = e.value("phi", 0.0);
        el.value = e.at("value").get<double>();
        spec.ellipses.push_back(el);
    }
    if (j.contains("vessels"))
        for (const auto& v : j.at("vessels")) {
            ct::Vessel n;
            n.cx = v.at("cx").get<double>();
            n.cy = v.at("cy").get<double>();
            n.radius = v.at("radius").get<double>();
            n.value = v.at("value").get<double>();
            spec.vessels.push_back(n);
        }
    spec.validate();
    return spec;
}

inline Json dose_to_json(const ct::DoseModel& d) {
    return Json{{"i0_routine", d.i0_routine},
                {"dose_fraction", d.dose_fraction},
                {"count_floor", d.count_floor},
                {"rng_seed", d.rng_seed},
                {"no_noise", d.no_noise}};
}

inline ct::DoseModel dose_from_json(const Json& j) {
    ct::DoseModel d;
    d.i0_routine = j.value("i0_routine", d.i0_routine);
    d.dose_fraction = j.value("dose_fraction", d.dose_fraction);
    d.count_floor = j.value("count_floor", d.count_floor);
    d.rng_seed = j.value("rng_seed", d.rng_seed);
    d.no_noise = j.value("no_noise", d.no_noise);
    d.validate();
    return d;
}

} // namespace wnct::io
