#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "wnct/objectives/metrics.hpp"
#include "wnct/pipeline/adam.hpp"
#include "wnct/pipeline/augment.hpp"
#include "wnct/pipeline/dataset.hpp"
#include "wnct/pipeline/trainer.hpp"

using namespace wnct;
using namespace wnct::pipeline;

namespace {

std::string fresh_dir(const std::string& name) {
    const std::string dir = std::filesystem::temp_directory_path() / ("wnct_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

DatasetConfig tiny_dataset_config(std::uint64_t seed, int size = 32) {
    DatasetConfig cfg;
    cfg.size = size;
    cfg.n_phantoms = 4;
    cfg.slices_per_phantom = 2;
    cfg.split = {2, 1, 1};
    cfg.n_angles = 24;
    cfg.dose.i0_routine = 1e4;
    cfg.dose.dose_fraction = 0.25;
    cfg.seed = seed;
    return cfg;
}

std::string read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

Image tensor_to_image(const nn::Tensor4<double>& t) {
    Image img(t.h, t.w);
    img.v = t.v;
    return img;
}

} // namespace

TEST_CASE("augment: identity transform is bitwise exact") {
    Rng rng(91);
    auto x = testutil::random_uniform_tensor(1, 1, 32, 32, rng);
    const auto orig = x.v;
    SampledTransform t; // all zero
    apply_transform_plane(t, x.data(), 32, 32);
    REQUIRE(x.v == orig);
}

TEST_CASE("augment: forced reflection applied twice is the identity") {
    Rng rng(93);
    auto x = testutil::random_uniform_tensor(1, 1, 16, 16, rng);
    const auto orig = x.v;
    SampledTransform t;
    t.flip_h = true;
    t.flip_v = true;
    apply_transform_plane(t, x.data(), 16, 16);
    REQUIRE(x.v != orig);
    apply_transform_plane(t, x.data(), 16, 16);
    REQUIRE(x.v == orig);
}

TEST_CASE("augment: flips preserve SSIM, small rotations nearly do") {
    Rng rng(95);
    // smooth-ish correlated pair
    nn::Tensor4<double> x(1, 1, 64, 64), y(1, 1, 64, 64);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double base = rng.uniform();
        x.v[i] = 0.8 * base + 0.2 * rng.uniform();
        y.v[i] = 0.8 * base + 0.2 * rng.uniform();
    }
    const double before = objectives::ssim_metric(tensor_to_image(x), tensor_to_image(y));
    {
        auto xf = x, yf = y;
        SampledTransform t;
        t.flip_h = true;
        apply_transform_plane(t, xf.data(), 64, 64);
        apply_transform_plane(t, yf.data(), 64, 64);
        const double after = objectives::ssim_metric(tensor_to_image(xf), tensor_to_image(yf));
        REQUIRE(std::fabs(after - before) < 1e-10);
    }
    {
        auto xr = x, yr = y;
        SampledTransform t;
        t.angle_rad = 5.0 * M_PI / 180.0;
        apply_transform_plane(t, xr.data(), 64, 64);
        apply_transform_plane(t, yr.data(), 64, 64);
        const double after = objectives::ssim_metric(tensor_to_image(xr), tensor_to_image(yr));
        REQUIRE(std::fabs(after - before) < 2e-2);
    }
}

TEST_CASE("augment_pair applies one identical transform to both members") {
    Rng rng(97);
    auto x = testutil::random_uniform_tensor(1, 1, 32, 32, rng);
    auto y = x;
    AugmentConfig cfg; // defaults: +/-16 px, +/-10 deg, both flips
    for (std::uint64_t index = 0; index < 8; ++index) {
        auto xi = x, yi = y;
        augment_pair(cfg, 12345, index, xi, yi);
        REQUIRE(xi.v == yi.v);
    }
}

TEST_CASE("augment_pair is deterministic per (seed, index)") {
    Rng rng(99);
    auto x = testutil::random_uniform_tensor(1, 1, 16, 16, rng);
    auto y = x;
    AugmentConfig cfg;
    auto x1 = x, y1 = y, x2 = x, y2 = y;
    augment_pair(cfg, 7, 3, x1, y1);
    augment_pair(cfg, 7, 3, x2, y2);
    REQUIRE(x1.v == x2.v);
    auto x3 = x, y3 = y;
    augment_pair(cfg, 7, 4, x3, y3);
    REQUIRE(x1.v != x3.v);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    nn::Parameter<double> w("w", nn::Tensor4<double>(1, 1, 2, 2));
    w.value.v = {1.0, -2.0, 3.0, 0.5};
    const auto before = w.value.v;
    std::vector<nn::Parameter<double>*> params = {&w};
    AdamState<double> state;
    adam_step(params, state, 1, AdamConfig{});
    REQUIRE(w.value.v == before);
}

TEST_CASE("adam: first bias-corrected step on f(w) = w^2") {
    nn::Parameter<double> w("w", nn::Tensor4<double>(1, 1, 1, 1));
    w.value.v[0] = 1.0;
    w.grad.v[0] = 2.0;
    std::vector<nn::Parameter<double>*> params = {&w};
    AdamState<double> state;
    AdamConfig cfg;
    cfg.lr = 0.1;
    adam_step(params, state, 1, cfg);
    REQUIRE(w.value.v[0] == Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8)).margin(1e-15));
}

TEST_CASE("adam: three hand-computed steps match to 1e-9") {
    nn::Parameter<double> w("w", nn::Tensor4<double>(1, 1, 1, 1));
    w.value.v[0] = 1.0;
    std::vector<nn::Parameter<double>*> params = {&w};
    AdamState<double> state;
    AdamConfig cfg;
    cfg.lr = 0.1;
    double ref = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 3; ++t) {
        w.zero_grad();
        w.grad.v[0] = 2.0 * w.value.v[0];
        adam_step(params, state, t, cfg);

        const double g = 2.0 * ref;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mhat = m / (1.0 - std::pow(0.9, t));
        const double vhat = v / (1.0 - std::pow(0.999, t));
        ref -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
        REQUIRE(w.value.v[0] == Approx(ref).margin(1e-9));
    }
}

TEST_CASE("adam: 50 steps on f(w) = w^2 contract toward zero") {
    nn::Parameter<double> w("w", nn::Tensor4<double>(1, 1, 1, 1));
    w.value.v[0] = 1.0;
    std::vector<nn::Parameter<double>*> params = {&w};
    AdamState<double> state;
    AdamConfig cfg;
    cfg.lr = 0.1;
    for (int t = 1; t <= 50; ++t) {
        w.zero_grad();
        w.grad.v[0] = 2.0 * w.value.v[0];
        adam_step(params, state, t, cfg);
    }
    REQUIRE(std::fabs(w.value.v[0]) < 0.5);
}

TEST_CASE("adam rejects step counters below 1") {
    nn::Parameter<double> w("w", nn::Tensor4<double>(1, 1, 1, 1));
    std::vector<nn::Parameter<double>*> params = {&w};
    AdamState<double> state;
    REQUIRE_THROWS_AS(adam_step(params, state, 0, AdamConfig{}), data_error);
}

TEST_CASE("split proportions and hygiene") {
    SplitConfig split;
    const auto counts = split.counts(10);
    REQUIRE(counts[0] == 5);
    REQUIRE(counts[1] == 2);
    REQUIRE(counts[2] == 3);
}

TEST_CASE("normalization inverts to 1e-6") {
    Normalization norm;
    norm.lo = -0.37;
    norm.hi = 1.93;
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const double raw = rng.uniform(norm.lo, norm.hi);
        const double n = norm.apply(raw);
        REQUIRE(n >= 0.0);
        REQUIRE(n <= 1.0);
        REQUIRE(std::fabs(norm.invert(n) - raw) < 1e-6);
    }
}

TEST_CASE("build_dataset is byte-identical for a fixed seed", "[dataset]") {
    const auto cfg = tiny_dataset_config(11);
    const std::string dir_a = fresh_dir("ds_a"), dir_b = fresh_dir("ds_b");
    build_dataset(cfg, dir_a);
    build_dataset(cfg, dir_b);
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), dir_a);
        REQUIRE(read_all(entry.path()) == read_all(std::filesystem::path(dir_b) / rel));
    }
}

TEST_CASE("build_dataset without noise produces identical ldct/rdct", "[dataset]") {
    auto cfg = tiny_dataset_config(13);
    cfg.dose.no_noise = true;
    const std::string dir = fresh_dir("ds_nonoise");
    const auto ds = build_dataset(cfg, dir);
    for (const auto& s : ds.slices)
        REQUIRE(read_all(dir + "/" + s.ldct) == read_all(dir + "/" + s.rdct));
}

TEST_CASE("dataset split assigns each phantom to exactly one group", "[dataset]") {
    const std::string dir = fresh_dir("ds_split");
    build_dataset(tiny_dataset_config(17), dir);
    const auto ds = load_dataset(dir);
    const auto train = ds.split(SplitGroup::train);
    const auto val = ds.split(SplitGroup::val);
    const auto test = ds.split(SplitGroup::test);
    REQUIRE(train.size() == 4);
    REQUIRE(val.size() == 2);
    REQUIRE(test.size() == 2);
    REQUIRE(train.size() + val.size() + test.size() == ds.slices.size());
    for (const auto* a : train)
        for (const auto* b : test) REQUIRE(a->phantom != b->phantom);
}

TEST_CASE("build_dataset accepts explicit phantom specs", "[dataset]") {
    auto cfg = tiny_dataset_config(37);
    cfg.n_phantoms = 3;
    cfg.slices_per_phantom = 1;
    cfg.split = {1, 1, 1};
    for (int i = 0; i < 3; ++i) {
        ct::PhantomSpec spec;
        spec.ellipses.push_back({0.0, 0.0, 0.5 + 0.1 * i, 0.4, 0.0, 0.5});
        spec.vessels.push_back({0.1, 0.0, 0.05, 0.3});
        cfg.explicit_phantoms.push_back(spec);
    }
    const std::string dir = fresh_dir("ds_explicit");
    const auto ds = build_dataset(cfg, dir);
    REQUIRE(ds.slices.size() == 3);
    // the manifest carries the specs verbatim
    const auto j = io::load_json(dir + "/manifest.json");
    REQUIRE(j.at("phantoms").size() == 3);
    REQUIRE(io::phantom_from_json(j.at("phantoms")[1]).ellipses[0].a == Approx(0.6));

    cfg.explicit_phantoms.pop_back();
    REQUIRE_THROWS_AS(build_dataset(cfg, fresh_dir("ds_explicit_bad")), data_error);
}

TEST_CASE("train rejects zero epochs") {
    TrainConfig cfg;
    cfg.epochs = 0;
    REQUIRE_THROWS_AS(cfg.validate(), data_error);
}

TEST_CASE("overfit smoke test: loss collapses on a 4-slice set", "[train]") {
    auto ds_cfg = tiny_dataset_config(19);
    ds_cfg.n_phantoms = 4;
    ds_cfg.slices_per_phantom = 2; // 2 train phantoms x 2 slices = 4 training slices
    ds_cfg.split = {2, 1, 1};
    const std::string dir = fresh_dir("overfit");
    const auto ds = build_dataset(ds_cfg, dir);

    models::WNetSpec spec = models::wnet_spec("I", 2, 16);
    models::WNet<float> net(spec, 5);
    TrainConfig cfg;
    cfg.epochs = 200; // batch 4 covers all 4 slices: one step per epoch, 200 steps
    cfg.batch_size = 4;
    cfg.seed = 3;
    AugmentConfig aug;
    aug.enabled = false;
    const auto result = train(net, ds, cfg, objectives::LossConfig{}, aug, fresh_dir("overfit_run"));

    const double initial = result.history.front().train_loss;
    const double final_loss = result.history.back().train_loss;
    REQUIRE(final_loss < 0.1 * initial);

    // smoothed (20-step windows) trajectory is non-increasing up to 5% wobble
    const int window = 20;
    std::vector<double> smoothed;
    for (std::size_t start = 0; start + window <= result.history.size(); start += window) {
        double acc = 0.0;
        for (int i = 0; i < window; ++i) acc += result.history[start + std::size_t(i)].train_loss;
        smoothed.push_back(acc / window);
    }
    for (std::size_t i = 1; i < smoothed.size(); ++i)
        REQUIRE(smoothed[i] <= smoothed[i - 1] * 1.05);
}

TEST_CASE("training is bitwise reproducible for a fixed seed", "[train]") {
    const std::string dir = fresh_dir("repro_ds");
    const auto ds = build_dataset(tiny_dataset_config(23), dir);
    const auto run = [&](const std::string& out) {
        models::WNet<float> net(models::wnet_spec("I", 2, 8), 9);
        TrainConfig cfg;
        cfg.epochs = 2;
        cfg.batch_size = 2;
        cfg.seed = 77;
        AugmentConfig aug; // defaults on: exercises the augment stream too
        aug.max_translate_px = 2;
        aug.max_rotate_deg = 5.0;
        return train(net, ds, cfg, objectives::LossConfig{}, aug, fresh_dir(out));
    };
    const auto a = run("repro_a");
    const auto b = run("repro_b");
    REQUIRE(read_all(a.history_csv) == read_all(b.history_csv));
}

TEST_CASE("divergent training aborts with a numeric error", "[train]") {
    const std::string dir = fresh_dir("diverge_ds");
    const auto ds = build_dataset(tiny_dataset_config(29), dir);
    models::WNet<float> net(models::wnet_spec("I", 2, 8), 13);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 4;
    cfg.adam.lr = 1e18; // guaranteed float overflow within a few steps
    AugmentConfig aug;
    aug.enabled = false;
    REQUIRE_THROWS_AS(train(net, ds, cfg, objectives::LossConfig{}, aug, fresh_dir("diverge_run")),
                      numeric_error);
}

TEST_CASE("evaluate emits methods x slices rows; no-noise ldct baseline is perfect", "[eval]") {
    auto cfg = tiny_dataset_config(31);
    cfg.dose.no_noise = true;
    const std::string dir = fresh_dir("eval_ds");
    const auto ds = build_dataset(cfg, dir);

    models::WNet<float> net(models::wnet_spec("I", 2, 8), 21);
    std::vector<std::pair<std::string, models::WNet<float>*>> nets = {{"I", &net}};
    const auto report = pipeline::evaluate(nets, ds, SplitGroup::test);
    const auto slices = ds.split(SplitGroup::test);
    REQUIRE(report.records.size() == 2 * slices.size()); // LDCT + one net
    for (const auto& r : report.records)
        if (r.method == "LDCT") {
            REQUIRE(r.ssim == Approx(1.0).margin(1e-12));
            REQUIRE(std::isinf(r.psnr_db));
            REQUIRE(r.nrmse_pct == 0.0);
        }
}

TEST_CASE("checkpoint round trip preserves every parameter bit", "[checkpoint]") {
    models::WNet<float> net(models::wnet_spec("FI", 2, 8), 33);
    Normalization norm;
    norm.lo = -1.25;
    norm.hi = 2.5;
    const std::string dir = fresh_dir("ckpt");
    io::save_checkpoint(dir, net, 33, norm);
    auto loaded = io::load_checkpoint<float>(dir);
    REQUIRE(loaded.seed == 33);
    REQUIRE(loaded.norm.lo == norm.lo);
    REQUIRE(loaded.net.spec().name == "FI");
    auto pa = net.parameters();
    auto pb = loaded.net.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i]->value.v == pb[i]->value.v);
}
