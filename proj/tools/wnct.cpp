// wnct: simulate paired low/routine-dose CT data, train the U-net/W-net
// variants, and evaluate them. See README.md for config formats.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wnct/ct/central_slice.hpp"
#include "wnct/ct/dose.hpp"
#include "wnct/errors.hpp"
#include "wnct/io/checkpoint.hpp"
#include "wnct/io/csv.hpp"
#include "wnct/io/manifest.hpp"
#include "wnct/io/png_io.hpp"
#include "wnct/objectives/stats.hpp"
#include "wnct/parallel.hpp"
#include "wnct/pipeline/trainer.hpp"
#include "wnct/version.hpp"

namespace {

using wnct::io::Json;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    wnct::require(f.good(), "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string config_hash_of(const std::string& path) {
    return wnct::io::hash_hex(wnct::io::fnv1a64(read_file(path)));
}

// ---- simulate ---------------------------------------------------------------

wnct::pipeline::DatasetConfig dataset_config_from_json(const Json& j) {
    wnct::pipeline::DatasetConfig cfg;
    cfg.size = j.value("size", cfg.size);
    cfg.fov = j.value("fov", cfg.fov);
    cfg.n_phantoms = j.value("n_phantoms", cfg.n_phantoms);
    cfg.slices_per_phantom = j.value("slices_per_phantom", cfg.slices_per_phantom);
    cfg.n_angles = j.value("n_angles", cfg.n_angles);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.noiseless_target = j.value("noiseless_target", cfg.noiseless_target);
    if (j.contains("split")) {
        cfg.split.train = j["split"].value("train", cfg.split.train);
        cfg.split.val = j["split"].value("val", cfg.split.val);
        cfg.split.test = j["split"].value("test", cfg.split.test);
    }
    if (j.contains("dose")) cfg.dose = wnct::io::dose_from_json(j["dose"]);
    if (j.contains("phantom_file")) {
        const auto pj = wnct::io::load_json(j["phantom_file"].get<std::string>());
        wnct::require(pj.is_array(), "phantom_file must hold an array of phantom specs");
        for (const auto& e : pj) cfg.explicit_phantoms.push_back(wnct::io::phantom_from_json(e));
        cfg.n_phantoms = int(cfg.explicit_phantoms.size());
    }
    return cfg;
}

int cmd_simulate(const std::string& config_path, std::string out_dir) {
    const Json j = wnct::io::load_json(config_path);
    auto cfg = dataset_config_from_json(j);
    if (out_dir.empty())
        if (const char* env = std::getenv("WNCT_OUT_DIR")) out_dir = env;
    if (out_dir.empty()) out_dir = j.value("out_dir", std::string());
    wnct::require(!out_dir.empty(), "simulate: no output directory (config out_dir or --out)");
    const auto ds = wnct::pipeline::build_dataset(cfg, out_dir);
    std::printf("dataset: %s\n", out_dir.c_str());
    std::printf("  slices: %zu (%d phantoms x %d), size %dx%d\n", ds.slices.size(),
                cfg.n_phantoms, cfg.slices_per_phantom, cfg.size, cfg.size);
    std::printf("  split: train %zu / val %zu / test %zu slices\n",
                ds.split(wnct::pipeline::SplitGroup::train).size(),
                ds.split(wnct::pipeline::SplitGroup::val).size(),
                ds.split(wnct::pipeline::SplitGroup::test).size());
    std::printf("  attenuation range [%g, %g] -> [0, 1]\n", ds.norm.lo, ds.norm.hi);
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainSetup {
    std::string dataset;
    std::string out_dir;
    wnct::models::WNetSpec spec;
    std::uint64_t model_seed = 7;
    std::string precision = "single";
    wnct::pipeline::TrainConfig train;
    wnct::objectives::LossConfig loss;
    wnct::pipeline::AugmentConfig augment;
};

TrainSetup train_setup_from_json(const Json& j) {
    TrainSetup s;
    s.dataset = j.at("dataset").get<std::string>();
    s.out_dir = j.value("out_dir", std::string("run"));
    const std::string variant = j.value("variant", std::string("I"));
    const int depth = j.value("depth", 4);
    s.spec = wnct::models::wnet_spec(variant, depth);
    s.model_seed = j.value("model_seed", std::uint64_t(7));
    s.precision = j.value("precision", std::string("single"));
    wnct::require(s.precision == "single" || s.precision == "double",
                  "train: precision must be 'single' or 'double'");
    if (j.contains("train")) {
        const auto& t = j["train"];
        s.train.epochs = t.value("epochs", s.train.epochs);
        s.train.batch_size = t.value("batch_size", s.train.batch_size);
        s.train.seed = t.value("seed", s.train.seed);
        s.train.checkpoint_every = t.value("checkpoint_every", s.train.checkpoint_every);
        s.train.adam.lr = t.value("lr", s.train.adam.lr);
        s.train.adam.beta1 = t.value("beta1", s.train.adam.beta1);
        s.train.adam.beta2 = t.value("beta2", s.train.adam.beta2);
        s.train.adam.eps = t.value("eps", s.train.adam.eps);
    }
    if (j.contains("loss")) {
        const auto& l = j["loss"];
        s.loss.alpha = l.value("alpha", s.loss.alpha);
        s.loss.k_image = l.value("k_image", s.loss.k_image);
        s.loss.k_fourier = l.value("k_fourier", s.loss.k_fourier);
    }
    if (j.contains("augment")) {
        const auto& a = j["augment"];
        s.augment.enabled = a.value("enabled", s.augment.enabled);
        s.augment.max_translate_px = a.value("max_translate_px", s.augment.max_translate_px);
        s.augment.max_rotate_deg = a.value("max_rotate_deg", s.augment.max_rotate_deg);
        s.augment.reflect_horizontal = a.value("reflect_horizontal", s.augment.reflect_horizontal);
        s.augment.reflect_vertical = a.value("reflect_vertical", s.augment.reflect_vertical);
    }
    return s;
}

template <typename T>
int run_train(const TrainSetup& s, const std::string& hash) {
    auto ds = wnct::pipeline::load_dataset(s.dataset);
    wnct::models::WNet<T> net(s.spec, s.model_seed);
    std::printf("training %s (depth %d, %lld parameters, %s precision)\n", s.spec.name.c_str(),
                s.spec.stages[0].second.depth, (long long)net.param_count(),
                sizeof(T) == 4 ? "single" : "double");
    const auto result =
        wnct::pipeline::train(net, ds, s.train, s.loss, s.augment, s.out_dir, hash);
    for (const auto& e : result.history)
        std::printf("  epoch %d: train_loss %.6g  val_loss %.6g  val_ssim %.4f\n", e.epoch,
                    e.train_loss, e.val_loss, e.val_ssim);
    std::printf("best epoch %d (val ssim %.4f) -> %s\n", result.best_epoch, result.best_val_ssim,
                result.best_checkpoint.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_override) {
    const Json j = wnct::io::load_json(config_path);
    auto setup = train_setup_from_json(j);
    if (const char* env = std::getenv("WNCT_OUT_DIR"); env && out_override.empty())
        setup.out_dir = env;
    if (!out_override.empty()) setup.out_dir = out_override;
    const std::string hash = config_hash_of(config_path);
    if (setup.precision == "double") return run_train<double>(setup, hash);
    return run_train<float>(setup, hash);
}

// ---- eval -------------------------------------------------------------------

int cmd_eval(const std::string& dataset_dir, const std::vector<std::string>& checkpoints,
             const std::string& out_dir, const std::string& split_name) {
    auto ds = wnct::pipeline::load_dataset(dataset_dir);
    wnct::pipeline::SplitGroup group = wnct::pipeline::SplitGroup::test;
    if (split_name == "val")
        group = wnct::pipeline::SplitGroup::val;
    else if (split_name == "train")
        group = wnct::pipeline::SplitGroup::train;
    else
        wnct::require(split_name == "test", "eval: split must be train, val or test");

    std::vector<wnct::models::WNet<float>> nets;
    std::vector<std::pair<std::string, wnct::models::WNet<float>*>> named;
    std::vector<std::string> labels;
    for (const auto& c : checkpoints) {
        auto loaded = wnct::io::load_checkpoint<float>(c);
        std::string label = loaded.net.spec().name;
        int suffix = 1;
        while (std::find(labels.begin(), labels.end(), label) != labels.end())
            label = loaded.net.spec().name + "#" + std::to_string(++suffix);
        labels.push_back(label);
        nets.push_back(std::move(loaded.net));
    }
    for (std::size_t i = 0; i < nets.size(); ++i) named.emplace_back(labels[i], &nets[i]);

    const auto report = wnct::pipeline::evaluate(named, ds, group);
    std::filesystem::create_directories(out_dir);
    std::string hash = wnct::io::hash_hex(wnct::io::fnv1a64(dataset_dir));

    {
        wnct::io::CsvWriter csv(out_dir + "/metrics.csv",
                                {"method", "slice_id", "ssim", "psnr_db", "nrmse_pct"}, hash);
        for (const auto& r : report.records)
            csv.write_row({r.method, r.slice_id, wnct::io::format_double(r.ssim),
                           wnct::io::format_double(r.psnr_db),
                           wnct::io::format_double(r.nrmse_pct)});
    }

    std::ofstream txt(out_dir + "/stats.txt");
    txt << "method means (" << split_name << " split)\n";
    std::printf("%-10s %10s %12s %12s\n", "method", "ssim", "psnr_db", "nrmse_pct");
    for (const auto& a : report.aggregates()) {
        std::printf("%-10s %6.4f+/-%.4f %7.2f+/-%.2f %7.2f+/-%.2f\n", a.method.c_str(),
                    a.ssim_mean, a.ssim_std, a.psnr_mean, a.psnr_std, a.nrmse_mean, a.nrmse_std);
        char line[256];
        std::snprintf(line, sizeof(line), "%-10s ssim %.4f+/-%.4f psnr %.2f+/-%.2f nrmse %.2f+/-%.2f",
                      a.method.c_str(), a.ssim_mean, a.ssim_std, a.psnr_mean, a.psnr_std,
                      a.nrmse_mean, a.nrmse_std);
        txt << line << "\n";
    }

    const auto methods = report.methods();
    wnct::io::CsvWriter stats_csv(
        out_dir + "/stats.csv",
        {"metric", "test", "method_a", "method_b", "statistic", "df", "p_raw", "p_corrected",
         "significant"},
        hash);
    if (methods.size() >= 3) {
        const std::array<std::pair<const char*, double wnct::objectives::MetricRecord::*>, 3>
            metrics = {{{"ssim", &wnct::objectives::MetricRecord::ssim},
                        {"psnr_db", &wnct::objectives::MetricRecord::psnr_db},
                        {"nrmse_pct", &wnct::objectives::MetricRecord::nrmse_pct}}};
        for (const auto& [mname, field] : metrics) {
            std::vector<std::vector<double>> scores;
            for (const auto& m : methods) scores.push_back(report.values(m, field));
            const auto fr = wnct::objectives::friedman_test(scores);
            stats_csv.write_row({mname, "friedman", "", "", wnct::io::format_double(fr.chi_square),
                                 std::to_string(fr.df), wnct::io::format_double(fr.p_value), "",
                                 fr.p_value < 0.05 ? "1" : "0"});
            txt << mname << ": friedman chi2 " << fr.chi_square << " (df " << fr.df << ", p "
                << fr.p_value << ")\n";
            for (const auto& pw : wnct::objectives::posthoc_pairwise(scores, methods)) {
                stats_csv.write_row({mname, "wilcoxon", pw.method_a, pw.method_b, "", "",
                                     wnct::io::format_double(pw.p_raw),
                                     wnct::io::format_double(pw.p_corrected),
                                     pw.significant ? "1" : "0"});
                txt << "  " << pw.method_a << " vs " << pw.method_b << ": p_raw " << pw.p_raw
                    << " corrected " << pw.p_corrected << (pw.significant ? "  *" : "") << "\n";
            }
        }
    } else {
        txt << "(fewer than 3 methods: statistical tests skipped)\n";
    }
    std::printf("wrote %s/metrics.csv and %s/stats.csv\n", out_dir.c_str(), out_dir.c_str());
    return 0;
}

// ---- enhance ----------------------------------------------------------------

int cmd_enhance(const std::string& checkpoint, const std::string& input_path,
                const std::string& output_path) {
    auto loaded = wnct::io::load_checkpoint<float>(checkpoint);
    const auto t = wnct::io::read_tensor(input_path);
    wnct::require(t.dims.size() == 2, "enhance: input must be a rank-2 tensor file");
    wnct::Image img(int(t.dims[0]), int(t.dims[1]));
    if (t.dtype == 0)
        for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = double(t.f32[i]);
    else
        img.v = t.f64;
    const wnct::Image out = wnct::pipeline::enhance_image(loaded.net, img);
    wnct::io::TensorFile result;
    result.dtype = 0;
    result.dims = t.dims;
    for (double x : out.v) result.f32.push_back(float(x));
    wnct::io::write_tensor(output_path, result);
    std::printf("enhanced %s -> %s\n", input_path.c_str(), output_path.c_str());
    return 0;
}

// ---- montage ----------------------------------------------------------------

int cmd_montage(const std::string& dataset_dir, const std::string& slice_id,
                const std::vector<std::string>& checkpoints, const std::string& output_path) {
    auto ds = wnct::pipeline::load_dataset(dataset_dir);
    const wnct::pipeline::SliceRecord* rec = nullptr;
    for (const auto& s : ds.slices)
        if (s.id() == slice_id) rec = &s;
    wnct::require(rec != nullptr, "montage: no slice with id " + slice_id);
    const wnct::Image ldct = ds.load_image(rec->ldct);
    const wnct::Image rdct = ds.load_image(rec->rdct);
    std::vector<wnct::Image> panels = {ldct};
    for (const auto& c : checkpoints) {
        auto loaded = wnct::io::load_checkpoint<float>(c);
        panels.push_back(wnct::pipeline::enhance_image(loaded.net, ldct));
    }
    panels.push_back(rdct);
    wnct::io::write_montage_png(output_path, panels);
    std::printf("montage (%zu panels) -> %s\n", panels.size(), output_path.c_str());
    return 0;
}

// ---- paramcount -------------------------------------------------------------

int cmd_paramcount(std::vector<std::string> names, int depth) {
    if (names.empty()) names = wnct::models::variant_names();
    std::map<std::string, long long> counts;
    std::printf("%-8s %14s\n", "variant", "parameters");
    for (const auto& name : names) {
        counts[name] = wnct::models::wnet_param_count(wnct::models::wnet_spec(name, depth));
        std::printf("%-8s %14lld\n", name.c_str(), counts[name]);
    }
    bool all_ok = true;
    const auto check = [&](const std::string& label, bool ok) {
        std::printf("%-42s %s\n", label.c_str(), ok ? "PASS" : "FAIL");
        all_ok = all_ok && ok;
    };
    if (counts.count("I") && counts.count("F"))
        check("count(F) - count(I) == 641", counts["F"] - counts["I"] == 641);
    if (counts.count("II") && counts.count("I"))
        check("count(II) == 2 * count(I)", counts["II"] == 2 * counts["I"]);
    if (counts.count("FF") && counts.count("F"))
        check("count(FF) == 2 * count(F)", counts["FF"] == 2 * counts["F"]);
    if (counts.count("FI") && counts.count("IF"))
        check("count(FI) == count(IF)", counts["FI"] == counts["IF"]);
    if (counts.count("FI") && counts.count("I") && counts.count("F"))
        check("count(FI) == count(I) + count(F)", counts["FI"] == counts["I"] + counts["F"]);
    return all_ok ? 0 : 3;
}

// ---- selftest ---------------------------------------------------------------

int cmd_selftest();

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wnct: dual-domain U-net/W-net toolkit for low-dose CT enhancement"};
    app.set_version_flag("--version", std::string(wnct::kVersion));
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (1 = bitwise reproducible)");
    app.require_subcommand(1);

    std::string config_path, out_dir, dataset_dir, split = "test";
    std::string checkpoint, input_path, output_path, slice_id;
    std::vector<std::string> checkpoints, names;
    int depth = 4;

    auto* sim = app.add_subcommand("simulate", "generate a paired low/routine-dose dataset");
    sim->add_option("config", config_path, "JSON config")->required();
    sim->add_option("--out", out_dir, "output directory (overrides config)");

    auto* trn = app.add_subcommand("train", "train a variant on a simulated dataset");
    trn->add_option("config", config_path, "JSON config")->required();
    trn->add_option("--out", out_dir, "run directory (overrides config)");

    auto* evl = app.add_subcommand("eval", "per-slice metrics + statistical tests");
    evl->add_option("--dataset", dataset_dir, "dataset directory")->required();
    evl->add_option("--out", out_dir, "report directory")->required();
    evl->add_option("--split", split, "train | val | test (default test)");
    evl->add_option("checkpoints", checkpoints, "checkpoint directories")->required();

    auto* enh = app.add_subcommand("enhance", "run a checkpoint on one image tensor");
    enh->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
    enh->add_option("--input", input_path, "input .wnct tensor (normalized to [0,1])")->required();
    enh->add_option("--output", output_path, "output .wnct tensor")->required();

    auto* mon = app.add_subcommand("montage", "LDCT | enhancements | RDCT comparison image");
    mon->add_option("--dataset", dataset_dir, "dataset directory")->required();
    mon->add_option("--slice", slice_id, "slice id, e.g. p7_s3")->required();
    mon->add_option("--output", output_path, "output PNG")->required();
    mon->add_option("checkpoints", checkpoints, "checkpoint directories");

    auto* par = app.add_subcommand("paramcount", "parameter counts + identity checks");
    par->add_option("names", names, "variant names (default: all six)");
    par->add_option("--depth", depth, "encoder depth (default 4)");

    app.add_subcommand("selftest", "run the built-in analytic checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // usage error
    }
    wnct::set_thread_count(threads);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_dir);
        if (trn->parsed()) return cmd_train(config_path, out_dir);
        if (evl->parsed()) return cmd_eval(dataset_dir, checkpoints, out_dir, split);
        if (enh->parsed()) return cmd_enhance(checkpoint, input_path, output_path);
        if (mon->parsed()) return cmd_montage(dataset_dir, slice_id, checkpoints, output_path);
        if (par->parsed()) return cmd_paramcount(names, depth);
        return cmd_selftest();
    } catch (const wnct::usage_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const wnct::numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const wnct::data_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

// ---- selftest body ----------------------------------------------------------

namespace {

int cmd_selftest() {
    int failures = 0;
    const auto check = [&](const char* label, bool ok) {
        std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", label);
        if (!ok) ++failures;
    };

    { // disk chord profile
        wnct::ct::PhantomSpec spec;
        spec.ellipses.push_back({0.0, 0.0, 0.25, 0.25, 0.0, 1.0});
        const auto img = wnct::ct::make_phantom(spec, 128);
        const auto geom = wnct::ct::SinogramGeometry::for_image(img, 4);
        const auto sino = wnct::ct::radon(img, geom);
        double worst = 0.0;
        for (int j = 0; j < geom.n_detectors; ++j) {
            const double s = geom.offset(j);
            if (std::fabs(std::fabs(s) - 0.25) < 2.5 * img.pixel_size()) continue;
            const double expect = std::fabs(s) < 0.25 ? 2.0 * std::sqrt(0.0625 - s * s) : 0.0;
            worst = std::max(worst, std::fabs(sino.at(0, j) - expect));
        }
        check("radon disk matches analytic chord profile (2% of peak)", worst < 0.01);
    }
    { // FFT round trip + Parseval
        wnct::Rng rng(5);
        wnct::Image img(64, 64);
        for (auto& x : img.v) x = rng.uniform();
        const auto spec = wnct::spectral::fft2(img);
        double e_img = 0.0, e_spec = 0.0;
        for (double x : img.v) e_img += x * x;
        for (const auto& z : spec.v) e_spec += std::norm(z);
        const auto back = wnct::spectral::ifft2(spec);
        double max_err = 0.0;
        for (std::size_t i = 0; i < img.v.size(); ++i)
            max_err = std::max(max_err, std::fabs(img.v[i] - back.v[i]));
        check("fft2 round trip (max abs < 1e-10)", max_err < 1e-10);
        check("fft2 Parseval (rel < 1e-4)", std::fabs(e_img - e_spec) < 1e-4 * e_img);
    }
    { // conv gradient vs finite differences
        wnct::nn::Tape<double> tape;
        wnct::Rng rng(11);
        wnct::nn::Tensor4<double> xt(1, 2, 6, 6), wt(3, 2, 3, 3), bt(1, 3, 1, 1);
        for (auto& v : xt.v) v = rng.normal();
        for (auto& v : wt.v) v = rng.normal() * 0.3;
        auto x = tape.leaf(xt, true);
        auto w = tape.leaf(wt, true);
        auto b = tape.leaf(bt, true);
        auto loss = tape.mean_all(tape.mul(tape.conv2d(x, w, b), tape.conv2d(x, w, b)));
        tape.backward(loss);
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t i = 0; i < wt.size(); i += 7) {
            auto eval = [&](double delta) {
                wnct::nn::Tape<double> t2;
                auto wt2 = wt;
                wt2.v[i] += delta;
                auto x2 = t2.leaf(xt, false);
                auto w2 = t2.leaf(wt2, false);
                auto b2 = t2.leaf(bt, false);
                auto l2 = t2.mean_all(t2.mul(t2.conv2d(x2, w2, b2), t2.conv2d(x2, w2, b2)));
                return t2.value(l2).v[0];
            };
            const double fd = (eval(h) - eval(-h)) / (2 * h);
            const double an = tape.grad(w).v[i];
            worst = std::max(worst, std::fabs(fd - an) / std::max(1.0, std::fabs(fd)));
        }
        check("conv2d gradient vs finite differences (< 1e-4)", worst < 1e-4);
    }
    { // Adam scalar trajectory on f(w) = w^2
        std::vector<wnct::nn::Parameter<double>*> params;
        wnct::nn::Parameter<double> w("w", wnct::nn::Tensor4<double>(1, 1, 1, 1));
        w.value.v[0] = 1.0;
        params.push_back(&w);
        wnct::pipeline::AdamState<double> state;
        wnct::pipeline::AdamConfig cfg;
        cfg.lr = 0.1;
        double ref_w = 1.0, m = 0.0, v = 0.0;
        bool ok = true;
        for (int t = 1; t <= 3; ++t) {
            w.zero_grad();
            w.grad.v[0] = 2.0 * w.value.v[0];
            wnct::pipeline::adam_step(params, state, t, cfg);
            const double g = 2.0 * ref_w;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            ref_w -= 0.1 * (m / (1 - std::pow(0.9, t))) /
                     (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
            ok = ok && std::fabs(w.value.v[0] - ref_w) < 1e-9;
        }
        check("adam matches hand-computed 3-step trajectory (1e-9)", ok);
    }
    { // central slice theorem
        const auto img = wnct::ct::make_phantom(wnct::ct::shepp_logan(), 128);
        bool ok = true;
        for (int a = 0; a < 4; ++a)
            ok = ok && wnct::ct::central_slice_check(img, a * M_PI / 4.0) >= 0.99;
        check("central slice correlation >= 0.99 at 4 angles", ok);
    }
    if (failures) std::printf("%d check(s) failed\n", failures);
    return failures == 0 ? 0 : 3;
}

} // namespace
