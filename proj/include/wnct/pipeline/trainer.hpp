#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/io/checkpoint.hpp"
#include "wnct/io/csv.hpp"
#include "wnct/models/wnet.hpp"
#include "wnct/objectives/loss.hpp"
#include "wnct/objectives/metrics.hpp"
#include "wnct/pipeline/adam.hpp"
#include "wnct/pipeline/augment.hpp"
#include "wnct/pipeline/dataset.hpp"

namespace wnct::pipeline {

struct TrainConfig {
    int epochs = 5;
    int batch_size = 4;
    AdamConfig adam;
    std::uint64_t seed = 0;
    int checkpoint_every = 0; // extra per-epoch checkpoints; 0 = best/last only

    void validate() const {
        require(epochs >= 1, "TrainConfig: epochs must be >= 1");
        require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    }
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_ssim = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_ssim = 0.0;
    std::string best_checkpoint;
    std::string history_csv;
};

namespace detail {

template <typename T>
nn::Tensor4<T> stack_images(const std::vector<Image>& imgs) {
    nn::Tensor4<T> out(int(imgs.size()), 1, imgs[0].height, imgs[0].width);
    std::size_t o = 0;
    for (const auto& img : imgs)
        for (double x : img.v) out.v[o++] = T(x);
    return out;
}

/// Sum of per-stage combined losses, each stage compared in its own domain.
template <typename T>
typename nn::Tape<T>::Var stage_loss_sum(nn::Tape<T>& tape, const models::WNetForward<T>& fwd,
                                         typename nn::Tape<T>::Var target_img,
                                         const objectives::LossConfig& loss_cfg) {
    using Var = typename nn::Tape<T>::Var;
    Var total{-1};
    Var target_spec{-1};
    for (const auto& stage : fwd.stage_outputs) {
        Var term{-1};
        if (stage.domain == models::Domain::image) {
            term = objectives::combined_loss(tape, stage.value, target_img,
                                             models::Domain::image, loss_cfg);
        } else {
            if (target_spec.id < 0) target_spec = tape.image_to_spectrum(target_img);
            term = objectives::combined_loss(tape, stage.value, target_spec,
                                             models::Domain::fourier, loss_cfg);
        }
        total = total.id < 0 ? term : tape.add(total, term);
    }
    return total;
}

inline Image tensor_plane_to_image(const nn::Tensor4<float>& t, int item, double fov) {
    Image img(t.h, t.w, fov);
    const float* src = t.data() + t.idx(item, 0, 0, 0);
    for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = double(src[i]);
    return img;
}

} // namespace detail

/// Run one batch through the network in inference mode and return the
/// enhanced images, clamped to [0, 1] by default.
template <typename T>
std::vector<Image> enhance_batch(models::WNet<T>& net, const std::vector<Image>& inputs,
                                 bool clamp01 = true) {
    nn::Tape<T> tape;
    auto x = tape.leaf(detail::stack_images<T>(inputs), false);
    auto fwd = net.forward(tape, x, /*train=*/false);
    const auto& out = tape.value(fwd.enhanced);
    std::vector<Image> result;
    for (int i = 0; i < out.n; ++i) {
        Image img(out.h, out.w, inputs[0].fov);
        const T* src = out.data() + out.idx(i, 0, 0, 0);
        for (std::size_t j = 0; j < img.v.size(); ++j) {
            double v = double(src[j]);
            if (clamp01) v = std::clamp(v, 0.0, 1.0);
            img.v[j] = v;
        }
        result.push_back(std::move(img));
    }
    return result;
}

template <typename T>
Image enhance_image(models::WNet<T>& net, const Image& input, bool clamp01 = true) {
    return enhance_batch(net, std::vector<Image>{input}, clamp01)[0];
}

/// Full optimization loop: shuffled mini-batches with paired augmentation,
/// per-stage losses summed, Adam updates, per-epoch validation loss and
/// SSIM, best-validation checkpointing, history CSV. Deterministic for a
/// fixed seed in single-thread mode. Throws numeric_error on divergence.
template <typename T>
TrainResult train(models::WNet<T>& net, const Dataset& ds, const TrainConfig& cfg,
                  const objectives::LossConfig& loss_cfg, const AugmentConfig& aug_cfg,
                  const std::string& out_dir, const std::string& config_hash = "0") {
    cfg.validate();
    loss_cfg.validate();
    const auto train_slices = ds.split(SplitGroup::train);
    const auto val_slices = ds.split(SplitGroup::val);
    require(!train_slices.empty(), "train: dataset has no training slices");
    require(!val_slices.empty(), "train: dataset has no validation slices");

    std::filesystem::create_directories(out_dir);
    auto params = net.parameters();
    AdamState<T> adam_state;
    std::int64_t step = 0;
    std::uint64_t augment_counter = 0;

    TrainResult result;
    result.best_val_ssim = -2.0;
    io::CsvWriter history_csv(out_dir + "/history.csv",
                              {"epoch", "train_loss", "val_loss", "val_ssim"}, config_hash);
    result.history_csv = out_dir + "/history.csv";

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(train_slices.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(mix_seed(cfg.seed, 0xe90c, std::uint64_t(epoch)));
        shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        int batches = 0;
        T worst_residual = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += std::size_t(cfg.batch_size)) {
            const std::size_t count = std::min(std::size_t(cfg.batch_size), order.size() - pos);
            std::vector<Image> inputs, targets;
            for (std::size_t b = 0; b < count; ++b) {
                const auto* rec = train_slices[order[pos + b]];
                inputs.push_back(ds.load_image(rec->ldct));
                targets.push_back(ds.load_image(ds.target_of(*rec)));
            }
            auto x = detail::stack_images<T>(inputs);
            auto y = detail::stack_images<T>(targets);
            if (aug_cfg.enabled) {
                for (int b = 0; b < x.n; ++b) {
                    nn::Tensor4<T> xi(1, 1, x.h, x.w), yi(1, 1, y.h, y.w);
                    std::copy_n(x.data() + x.idx(b, 0, 0, 0), xi.size(), xi.data());
                    std::copy_n(y.data() + y.idx(b, 0, 0, 0), yi.size(), yi.data());
                    augment_pair(aug_cfg, mix_seed(cfg.seed, 0xa06), augment_counter++, xi, yi);
                    std::copy_n(xi.data(), xi.size(), x.data() + x.idx(b, 0, 0, 0));
                    std::copy_n(yi.data(), yi.size(), y.data() + y.idx(b, 0, 0, 0));
                }
            }

            for (auto* p : params) p->zero_grad();
            nn::Tape<T> tape;
            auto xv = tape.leaf(std::move(x), false);
            auto yv = tape.leaf(std::move(y), false);
            auto fwd = net.forward(tape, xv, /*train=*/true);
            auto total = detail::stage_loss_sum(tape, fwd, yv, loss_cfg);
            const double loss = double(tape.value(total).v[0]);
            if (!std::isfinite(loss))
                throw numeric_error("train: loss became non-finite at step " +
                                    std::to_string(step + 1));
            tape.backward(total);
            adam_step(params, adam_state, ++step, cfg.adam);
            loss_sum += loss;
            ++batches;
            worst_residual = std::max(worst_residual, fwd.max_imag_residual);
        }
        // spectra emitted by fourier stages have no symmetry guarantee; a
        // large imaginary residual is expected early in training but worth
        // surfacing
        if (worst_residual > T(1e-3))
            std::fprintf(stderr,
                         "warning: epoch %d inverse-transform imaginary residual %.3g\n", epoch,
                         double(worst_residual));

        // validation pass, fixed order, no augmentation
        double val_loss_sum = 0.0;
        int val_batches = 0;
        double val_ssim_sum = 0.0;
        int val_count = 0;
        for (std::size_t pos = 0; pos < val_slices.size(); pos += std::size_t(cfg.batch_size)) {
            const std::size_t count = std::min(std::size_t(cfg.batch_size), val_slices.size() - pos);
            std::vector<Image> inputs, targets;
            for (std::size_t b = 0; b < count; ++b) {
                const auto* rec = val_slices[pos + b];
                inputs.push_back(ds.load_image(rec->ldct));
                targets.push_back(ds.load_image(ds.target_of(*rec)));
            }
            nn::Tape<T> tape;
            auto xv = tape.leaf(detail::stack_images<T>(inputs), false);
            auto yv = tape.leaf(detail::stack_images<T>(targets), false);
            auto fwd = net.forward(tape, xv, /*train=*/false);
            auto total = detail::stage_loss_sum(tape, fwd, yv, loss_cfg);
            val_loss_sum += double(tape.value(total).v[0]);
            ++val_batches;
            const auto& out = tape.value(fwd.enhanced);
            for (std::size_t b = 0; b < count; ++b) {
                Image enhanced(out.h, out.w, inputs[b].fov);
                const T* src = out.data() + out.idx(int(b), 0, 0, 0);
                for (std::size_t i = 0; i < enhanced.v.size(); ++i)
                    enhanced.v[i] = std::clamp(double(src[i]), 0.0, 1.0);
                val_ssim_sum += objectives::ssim_metric(enhanced, targets[b]);
                ++val_count;
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / std::max(1, batches);
        stats.val_loss = val_loss_sum / std::max(1, val_batches);
        stats.val_ssim = val_ssim_sum / std::max(1, val_count);
        result.history.push_back(stats);
        history_csv.write_row({std::to_string(epoch), io::format_double(stats.train_loss),
                               io::format_double(stats.val_loss),
                               io::format_double(stats.val_ssim)});

        if (stats.val_ssim > result.best_val_ssim) {
            result.best_val_ssim = stats.val_ssim;
            result.best_epoch = epoch;
            result.best_checkpoint = out_dir + "/best";
            io::save_checkpoint(result.best_checkpoint, net, cfg.seed, ds.norm);
        }
        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%03d", epoch);
            io::save_checkpoint(out_dir + "/" + name, net, cfg.seed, ds.norm);
        }
    }
    io::save_checkpoint(out_dir + "/last", net, cfg.seed, ds.norm);
    return result;
}

/// Per-slice metrics of every method against the target, including the
/// low-dose FBP baseline as its own method row.
template <typename T>
objectives::MetricReport evaluate(std::vector<std::pair<std::string, models::WNet<T>*>> nets,
                                  const Dataset& ds, SplitGroup group = SplitGroup::test) {
    const auto slices = ds.split(group);
    require(!slices.empty(), "evaluate: selected split is empty");
    objectives::MetricReport report;
    for (const auto* rec : slices) {
        const Image ldct = ds.load_image(rec->ldct);
        const Image target = ds.load_image(ds.target_of(*rec));
        objectives::MetricRecord base;
        base.method = "LDCT";
        base.slice_id = rec->id();
        base.ssim = objectives::ssim_metric(ldct, target);
        base.psnr_db = objectives::psnr(ldct, target);
        base.nrmse_pct = objectives::nrmse_percent(ldct, target);
        report.records.push_back(base);
        for (auto& [name, net] : nets) {
            const Image enhanced = enhance_image(*net, ldct);
            objectives::MetricRecord r;
            r.method = name;
            r.slice_id = rec->id();
            r.ssim = objectives::ssim_metric(enhanced, target);
            r.psnr_db = objectives::psnr(enhanced, target);
            r.nrmse_pct = objectives::nrmse_percent(enhanced, target);
            report.records.push_back(r);
        }
    }
    return report;
}

} // namespace wnct::pipeline
