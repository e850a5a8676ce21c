#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/image.hpp"
#include "wnct/objectives/loss.hpp"

namespace wnct::objectives {

/// Single-scale SSIM on normalized images: 11-tap Gaussian window (sigma
/// 1.5), valid region, C1/C2 from unit dynamic range, mean over the map.
inline double ssim_metric(const Image& pred, const Image& target, double range = 1.0) {
    require(pred.height == target.height && pred.width == target.width,
            "ssim_metric: shape mismatch");
    const int taps = 11;
    require(pred.height >= taps && pred.width >= taps, "ssim_metric: image smaller than window");
    const auto win = gaussian_window<double>(taps, 1.5);
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    const int oh = pred.height - taps + 1, ow = pred.width - taps + 1;

    // separable valid blur of a plane
    const auto blur = [&](const std::vector<double>& src, int h, int w) {
        std::vector<double> tmp(std::size_t(h) * ow), out(std::size_t(oh) * ow);
        for (int y = 0; y < h; ++y)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int t = 0; t < taps; ++t) acc += win[std::size_t(t)] * src[std::size_t(y) * w + ox + t];
                tmp[std::size_t(y) * ow + ox] = acc;
            }
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int t = 0; t < taps; ++t) acc += win[std::size_t(t)] * tmp[std::size_t(oy + t) * ow + ox];
                out[std::size_t(oy) * ow + ox] = acc;
            }
        return out;
    };

    const int h = pred.height, w = pred.width;
    std::vector<double> xx(pred.v.size()), yy(pred.v.size()), xy(pred.v.size());
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        xx[i] = pred.v[i] * pred.v[i];
        yy[i] = target.v[i] * target.v[i];
        xy[i] = pred.v[i] * target.v[i];
    }
    const auto mu_x = blur(pred.v, h, w);
    const auto mu_y = blur(target.v, h, w);
    const auto sxx = blur(xx, h, w);
    const auto syy = blur(yy, h, w);
    const auto sxy = blur(xy, h, w);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double vx = sxx[i] - mu_x[i] * mu_x[i];
        const double vy = syy[i] - mu_y[i] * mu_y[i];
        const double vxy = sxy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * vxy + c2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (vx + vy + c2);
        acc += num / den;
    }
    return acc / double(mu_x.size());
}

/// 10*log10(range^2 / MSE); +infinity for identical inputs.
inline double psnr(const Image& pred, const Image& target, double range = 1.0) {
    require(pred.height == target.height && pred.width == target.width, "psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double d = pred.v[i] - target.v[i];
        mse += d * d;
    }
    mse /= double(pred.v.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(range * range / mse);
}

/// 100 * ||pred - target||_2 / ||target||_2.
inline double nrmse_percent(const Image& pred, const Image& target) {
    require(pred.height == target.height && pred.width == target.width, "nrmse: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double d = pred.v[i] - target.v[i];
        num += d * d;
        den += target.v[i] * target.v[i];
    }
    require(den > 0.0, "nrmse: target has zero norm");
    return 100.0 * std::sqrt(num / den);
}

struct MetricRecord {
    std::string method;
    std::string slice_id;
    double ssim = 0.0;
    double psnr_db = 0.0;
    double nrmse_pct = 0.0;
};

struct MetricAggregate {
    std::string method;
    double ssim_mean = 0.0, ssim_std = 0.0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double nrmse_mean = 0.0, nrmse_std = 0.0;
    int count = 0;
};

struct MetricReport {
    std::vector<MetricRecord> records;

    std::vector<std::string> methods() const {
        std::vector<std::string> out;
        for (const auto& r : records)
            if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
        return out;
    }

    std::vector<double> values(const std::string& method, double MetricRecord::* field) const {
        std::vector<double> out;
        for (const auto& r : records)
            if (r.method == method) out.push_back(r.*field);
        return out;
    }

    std::vector<MetricAggregate> aggregates() const {
        std::vector<MetricAggregate> out;
        for (const auto& m : methods()) {
            MetricAggregate a;
            a.method = m;
            const auto stat = [&](double MetricRecord::* f, double& mean, double& sd) {
                const auto v = values(m, f);
                double s = 0.0;
                for (double x : v) s += x;
                mean = v.empty() ? 0.0 : s / double(v.size());
                double q = 0.0;
                for (double x : v) q += (x - mean) * (x - mean);
                sd = v.size() > 1 ? std::sqrt(q / double(v.size() - 1)) : 0.0;
            };
            stat(&MetricRecord::ssim, a.ssim_mean, a.ssim_std);
            stat(&MetricRecord::psnr_db, a.psnr_mean, a.psnr_std);
            stat(&MetricRecord::nrmse_pct, a.nrmse_mean, a.nrmse_std);
            a.count = int(values(m, &MetricRecord::ssim).size());
            out.push_back(a);
        }
        return out;
    }
};

} // namespace wnct::objectives
