#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <string>
#include <vector>

#include "wnct/ct/dose.hpp"
#include "wnct/ct/phantom.hpp"
#include "wnct/errors.hpp"
#include "wnct/image.hpp"
#include "wnct/io/container.hpp"
#include "wnct/io/manifest.hpp"
#include "wnct/nn/tensor.hpp"
#include "wnct/rng.hpp"

namespace wnct::pipeline {

enum class SplitGroup { train, val, test };

inline const char* split_name(SplitGroup g) {
    switch (g) {
        case SplitGroup::train: return "train";
        case SplitGroup::val: return "val";
        default: return "test";
    }
}

/// Phantoms (never slices) are partitioned between the groups, default
/// proportions 5:2:3.
struct SplitConfig {
    int train = 5, val = 2, test = 3;

    void validate() const {
        require(train >= 1 && val >= 1 && test >= 1, "SplitConfig: all groups need phantoms");
    }

    /// Group sizes for n phantoms, proportional with the remainder going to
    /// the earlier groups.
    std::array<int, 3> counts(int n) const {
        const int total = train + val + test;
        require(n >= 3, "SplitConfig: need at least 3 phantoms");
        std::array<double, 3> want = {double(train) * n / total, double(val) * n / total,
                                      double(test) * n / total};
        std::array<int, 3> got = {int(want[0]), int(want[1]), int(want[2])};
        int assigned = got[0] + got[1] + got[2];
        for (int i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++got[std::size_t(i)];
        for (auto& g : got)
            if (g == 0) g = 1; // never starve a group
        while (got[0] + got[1] + got[2] > n) --got[0];
        return got;
    }
};

/// Global affine map taking the dataset attenuation range to [0, 1].
struct Normalization {
    double lo = 0.0;
    double hi = 1.0;

    double apply(double raw) const { return (raw - lo) / (hi - lo); }
    double invert(double norm) const { return norm * (hi - lo) + lo; }

    void validate() const { require(hi > lo, "Normalization: range must be increasing"); }
};

struct DatasetConfig {
    int size = 64;
    double fov = 1.0;
    int n_phantoms = 10;
    int slices_per_phantom = 20;
    int n_angles = 96;
    SplitConfig split;
    ct::DoseModel dose;
    bool noiseless_target = false; // use the clean phantom as the training target
    std::uint64_t seed = 1;
    std::vector<ct::PhantomSpec> explicit_phantoms; // overrides the generator when set

    void validate() const {
        require(size >= 16, "DatasetConfig: size must be >= 16");
        require(n_phantoms >= 3, "DatasetConfig: need at least 3 phantoms");
        require(slices_per_phantom >= 1, "DatasetConfig: need at least 1 slice per phantom");
        require(n_angles >= 1, "DatasetConfig: need at least 1 angle");
        split.validate();
        dose.validate();
        if (!explicit_phantoms.empty())
            require(int(explicit_phantoms.size()) == n_phantoms,
                    "DatasetConfig: explicit phantom count must match n_phantoms");
    }
};

struct SliceRecord {
    int phantom = 0;
    int slice = 0;
    std::string ldct;
    std::string rdct;
    std::string truth;

    std::string id() const {
        return "p" + std::to_string(phantom) + "_s" + std::to_string(slice);
    }
};

/// A dataset rooted in a directory: normalized slice tensors plus the
/// manifest that makes the run reproducible and invertible.
struct Dataset {
    std::string root;
    DatasetConfig cfg;
    Normalization norm;
    std::vector<SplitGroup> phantom_group; // by phantom id
    std::vector<SliceRecord> slices;

    std::vector<const SliceRecord*> split(SplitGroup g) const {
        std::vector<const SliceRecord*> out;
        for (const auto& s : slices)
            if (phantom_group[std::size_t(s.phantom)] == g) out.push_back(&s);
        return out;
    }

    Image load_image(const std::string& rel) const {
        const auto t = io::read_tensor(root + "/" + rel);
        require(t.dims.size() == 2, "dataset image must be rank 2: " + rel);
        Image img(int(t.dims[0]), int(t.dims[1]), cfg.fov);
        if (t.dtype == 0)
            for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = double(t.f32[i]);
        else
            img.v = t.f64;
        return img;
    }

    /// Training target for a slice: routine-dose image, or the clean
    /// phantom when the dataset was built noiseless_target.
    const std::string& target_of(const SliceRecord& s) const {
        return cfg.noiseless_target ? s.truth : s.rdct;
    }
};

namespace detail {

inline void write_image_f32(const std::string& path, const Image& img) {
    io::TensorFile t;
    t.dtype = 0;
    t.dims = {std::uint32_t(img.height), std::uint32_t(img.width)};
    t.f32.reserve(img.v.size());
    for (double x : img.v) t.f32.push_back(float(x));
    io::write_tensor(path, t);
}

} // namespace detail

/// Simulate and persist a paired low/routine-dose dataset. Deterministic for
/// a fixed config: the same seed produces byte-identical output.
inline Dataset build_dataset(const DatasetConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/slices");

    Dataset ds;
    ds.root = out_dir;
    ds.cfg = cfg;

    // split assignment by phantom id
    const auto counts = cfg.split.counts(cfg.n_phantoms);
    for (int p = 0; p < cfg.n_phantoms; ++p) {
        if (p < counts[0])
            ds.phantom_group.push_back(SplitGroup::train);
        else if (p < counts[0] + counts[1])
            ds.phantom_group.push_back(SplitGroup::val);
        else
            ds.phantom_group.push_back(SplitGroup::test);
    }

    std::vector<ct::PhantomSpec> base_specs;
    for (int p = 0; p < cfg.n_phantoms; ++p)
        base_specs.push_back(cfg.explicit_phantoms.empty()
                                 ? ct::random_abdomen(mix_seed(cfg.seed, 0xabd, p))
                                 : cfg.explicit_phantoms[std::size_t(p)]);

    // simulate every slice pair, collecting the global attenuation range
    struct RawSlice {
        SliceRecord rec;
        Image ldct, rdct, truth;
    };
    std::vector<RawSlice> raw;
    Image probe(cfg.size, cfg.size, cfg.fov);
    const auto geom = ct::SinogramGeometry::for_image(probe, cfg.n_angles);
    double lo = 1e300, hi = -1e300;
    for (int p = 0; p < cfg.n_phantoms; ++p) {
        for (int s = 0; s < cfg.slices_per_phantom; ++s) {
            const double t = cfg.slices_per_phantom > 1 ? double(s) / (cfg.slices_per_phantom - 1)
                                                        : 0.0;
            const auto spec =
                ct::slice_variant(base_specs[std::size_t(p)], t, mix_seed(cfg.seed, 0x51, p));
            ct::DoseModel dose = cfg.dose;
            dose.rng_seed = mix_seed(cfg.seed, p, s);
            RawSlice rs;
            rs.rec.phantom = p;
            rs.rec.slice = s;
            auto pair = ct::make_pair(spec, geom, dose, cfg.size, cfg.fov);
            rs.ldct = std::move(pair.ldct);
            rs.rdct = std::move(pair.rdct);
            rs.truth = std::move(pair.truth);
            for (const Image* img : {&rs.ldct, &rs.rdct, &rs.truth}) {
                require(img->all_finite(), "build_dataset: non-finite reconstruction");
                for (double x : img->v) {
                    lo = std::min(lo, x);
                    hi = std::max(hi, x);
                }
            }
            raw.push_back(std::move(rs));
        }
    }

    ds.norm.lo = lo;
    ds.norm.hi = hi;
    ds.norm.validate();

    io::Json slices_json = io::Json::array();
    for (auto& rs : raw) {
        const std::string stem = "slices/" + rs.rec.id();
        rs.rec.ldct = stem + "_ldct.wnct";
        rs.rec.rdct = stem + "_rdct.wnct";
        rs.rec.truth = stem + "_truth.wnct";
        const std::array<std::pair<Image*, const std::string*>, 3> files = {
            {{&rs.ldct, &rs.rec.ldct}, {&rs.rdct, &rs.rec.rdct}, {&rs.truth, &rs.rec.truth}}};
        for (auto [img, rel] : files) {
            for (auto& x : img->v) x = ds.norm.apply(x);
            detail::write_image_f32(out_dir + "/" + *rel, *img);
        }
        slices_json.push_back({{"phantom", rs.rec.phantom},
                               {"slice", rs.rec.slice},
                               {"ldct", rs.rec.ldct},
                               {"rdct", rs.rec.rdct},
                               {"truth", rs.rec.truth}});
        ds.slices.push_back(rs.rec);
    }

    io::Json manifest;
    manifest["format"] = 1;
    manifest["seed"] = cfg.seed;
    manifest["size"] = cfg.size;
    manifest["fov"] = cfg.fov;
    manifest["n_phantoms"] = cfg.n_phantoms;
    manifest["slices_per_phantom"] = cfg.slices_per_phantom;
    manifest["geometry"] = {{"n_angles", geom.n_angles},
                            {"n_detectors", geom.n_detectors},
                            {"detector_spacing", geom.detector_spacing}};
    manifest["dose"] = io::dose_to_json(cfg.dose);
    manifest["noiseless_target"] = cfg.noiseless_target;
    manifest["normalization"] = {{"lo", ds.norm.lo}, {"hi", ds.norm.hi}};
    io::Json split_json;
    for (int g = 0; g < 3; ++g) {
        io::Json ids = io::Json::array();
        for (int p = 0; p < cfg.n_phantoms; ++p)
            if (int(ds.phantom_group[std::size_t(p)]) == g) ids.push_back(p);
        split_json[split_name(SplitGroup(g))] = ids;
    }
    manifest["split"] = split_json;
    io::Json phantoms_json = io::Json::array();
    for (const auto& spec : base_specs) phantoms_json.push_back(io::phantom_to_json(spec));
    manifest["phantoms"] = phantoms_json;
    manifest["slices"] = slices_json;
    io::save_json(out_dir + "/manifest.json", manifest);
    return ds;
}

/// Load a dataset previously written by build_dataset.
inline Dataset load_dataset(const std::string& root) {
    const auto j = io::load_json(root + "/manifest.json");
    require(j.value("format", 0) == 1, "load_dataset: unsupported manifest format");
    Dataset ds;
    ds.root = root;
    ds.cfg.seed = j.at("seed").get<std::uint64_t>();
    ds.cfg.size = j.at("size").get<int>();
    ds.cfg.fov = j.at("fov").get<double>();
    ds.cfg.n_phantoms = j.at("n_phantoms").get<int>();
    ds.cfg.slices_per_phantom = j.at("slices_per_phantom").get<int>();
    ds.cfg.n_angles = j.at("geometry").at("n_angles").get<int>();
    ds.cfg.dose = io::dose_from_json(j.at("dose"));
    ds.cfg.noiseless_target = j.value("noiseless_target", false);
    ds.norm.lo = j.at("normalization").at("lo").get<double>();
    ds.norm.hi = j.at("normalization").at("hi").get<double>();
    ds.norm.validate();

    ds.phantom_group.assign(std::size_t(ds.cfg.n_phantoms), SplitGroup::train);
    for (int g = 0; g < 3; ++g)
        for (const auto& p : j.at("split").at(split_name(SplitGroup(g))))
            ds.phantom_group[p.get<std::size_t>()] = SplitGroup(g);

    for (const auto& s : j.at("slices")) {
        SliceRecord rec;
        rec.phantom = s.at("phantom").get<int>();
        rec.slice = s.at("slice").get<int>();
        rec.ldct = s.at("ldct").get<std::string>();
        rec.rdct = s.at("rdct").get<std::string>();
        rec.truth = s.at("truth").get<std::string>();
        for (const auto& rel : {rec.ldct, rec.rdct, rec.truth})
            require(std::filesystem::exists(root + "/" + rel),
                    "load_dataset: missing slice file " + rel);
        ds.slices.push_back(rec);
    }
    require(!ds.slices.empty(), "load_dataset: dataset has no slices");

    // split hygiene: a phantom id must sit in exactly one group
    for (int g = 0; g < 3; ++g)
        for (int h = g + 1; h < 3; ++h)
            for (const auto& a : j.at("split").at(split_name(SplitGroup(g))))
                for (const auto& b : j.at("split").at(split_name(SplitGroup(h))))
                    require(a.get<int>() != b.get<int>(),
                            "load_dataset: phantom assigned to two splits");
    return ds;
}

} // namespace wnct::pipeline
