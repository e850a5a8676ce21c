#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wnct/errors.hpp"

namespace wnct::objectives {

namespace detail {

/// Regularized upper incomplete gamma Q(a, x) via series / continued
/// fraction (the usual split at x = a + 1).
inline double gammq(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gammq: bad arguments");
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // lower series
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi2_sf(double x, int df) { return gammq(df / 2.0, x / 2.0); }

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Ranks with average-rank tie handling.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * double(i + j) + 1.0; // average of 1-based ranks i+1..j+1
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

struct PairwiseResult {
    std::string method_a;
    std::string method_b;
    double p_raw = 1.0;
    double p_corrected = 1.0;
    bool significant = false; // at 0.05 after correction
};

struct StatResult {
    double chi_square = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::vector<PairwiseResult> pairwise;
};

/// Friedman rank test over a methods x slices score table. Larger scores
/// rank higher; ties get average ranks; p from the chi-square tail with
/// df = k - 1.
inline StatResult friedman_test(const std::vector<std::vector<double>>& scores) {
    const std::size_t k = scores.size();
    require(k >= 3, "friedman_test: need at least 3 methods");
    const std::size_t n = scores[0].size();
    require(n >= 10, "friedman_test: need at least 10 slices");
    for (const auto& row : scores)
        require(row.size() == n, "friedman_test: ragged score table");

    std::vector<double> rank_sums(k, 0.0);
    std::vector<double> column(k);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t m = 0; m < k; ++m) column[m] = scores[m][s];
        const auto ranks = detail::average_ranks(column);
        for (std::size_t m = 0; m < k; ++m) rank_sums[m] += ranks[m];
    }
    const double dk = double(k), dn = double(n);
    // deviation form of 12/(nk(k+1)) * sum R^2 - 3n(k+1): identical
    // algebraically, but exactly zero on fully tied data
    const double mean_rank_sum = dn * (dk + 1.0) / 2.0;
    double dev_sq = 0.0;
    for (double r : rank_sums) dev_sq += (r - mean_rank_sum) * (r - mean_rank_sum);
    StatResult out;
    out.chi_square = 12.0 / (dn * dk * (dk + 1.0)) * dev_sq;
    out.df = int(k) - 1;
    out.p_value = detail::chi2_sf(out.chi_square, out.df);
    return out;
}

/// Two-sided Wilcoxon signed-rank p-value, normal approximation with zero
/// removal, tie correction and continuity correction.
inline double wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "wilcoxon: paired samples must have equal length");
    std::vector<double> absd;
    std::vector<int> sign;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        // zero differences are dropped per convention, and so is the NaN
        // from two infinite scores (inf-vs-inf PSNR of identical images);
        // a single infinite score keeps its sign and outranks everything
        if (d == 0.0 || std::isnan(d)) continue;
        absd.push_back(std::fabs(d));
        sign.push_back(d > 0.0 ? 1 : -1);
    }
    const std::size_t n = absd.size();
    if (n == 0) return 1.0;
    const auto ranks = detail::average_ranks(absd);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (sign[i] > 0) w_plus += ranks[i];

    const double dn = double(n);
    const double mean = dn * (dn + 1.0) / 4.0;
    double tie_term = 0.0;
    {
        std::vector<double> sorted = absd;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = double(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;
    const double diff = w_plus - mean;
    const double cc = diff > 0.0 ? 0.5 : (diff < 0.0 ? -0.5 : 0.0);
    const double z = (diff - cc) / std::sqrt(var);
    double p = 2.0 * detail::normal_sf(std::fabs(z));
    return std::min(1.0, p);
}

/// All-pairs Wilcoxon tests with Bonferroni correction:
/// corrected p = min(1, raw p * C(k,2)).
inline std::vector<PairwiseResult> posthoc_pairwise(const std::vector<std::vector<double>>& scores,
                                                    const std::vector<std::string>& names,
                                                    double alpha = 0.05) {
    require(scores.size() == names.size(), "posthoc_pairwise: names/scores mismatch");
    require(scores.size() >= 2, "posthoc_pairwise: need at least one pair");
    const std::size_t k = scores.size();
    const double pairs = double(k * (k - 1) / 2);
    std::vector<PairwiseResult> out;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            PairwiseResult r;
            r.method_a = names[i];
            r.method_b = names[j];
            r.p_raw = wilcoxon_signed_rank(scores[i], scores[j]);
            r.p_corrected = std::min(1.0, r.p_raw * pairs);
            r.significant = r.p_corrected < alpha;
            out.push_back(r);
        }
    return out;
}

} // namespace wnct::objectives
