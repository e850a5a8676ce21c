#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "wnct/nn/autodiff.hpp"
#include "wnct/nn/init.hpp"
#include "wnct/nn/tensor.hpp"
#include "wnct/rng.hpp"

using namespace wnct;
using nn::Tensor4;
using TapeD = nn::Tape<double>;
using VarD = TapeD::Var;

namespace {

// Six-loop reference convolution, the oracle for the GEMM path.
Tensor4<double> conv_reference(const Tensor4<double>& x, const Tensor4<double>& w,
                               const Tensor4<double>& b) {
    const int pad = (w.h - 1) / 2;
    Tensor4<double> out(x.n, w.n, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int oc = 0; oc < w.n; ++oc)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) {
                    double acc = b.v[std::size_t(oc)];
                    for (int ic = 0; ic < x.c; ++ic)
                        for (int ky = 0; ky < w.h; ++ky)
                            for (int kx = 0; kx < w.w; ++kx) {
                                const int sy = y + ky - pad, sx = xx + kx - pad;
                                if (sy < 0 || sy >= x.h || sx < 0 || sx >= x.w) continue;
                                acc += w.at(oc, ic, ky, kx) * x.at(in, ic, sy, sx);
                            }
                    out.at(in, oc, y, xx) = acc;
                }
    return out;
}

// Stride-2 2x2 "downsampling" convolution sharing transpose_conv2d weights.
Tensor4<double> conv_downsample(const Tensor4<double>& z, const Tensor4<double>& w) {
    // z: (N, OC, 2H, 2W), w: (IC, OC, 2, 2) -> (N, IC, H, W)
    const int h = z.h / 2, wd = z.w / 2;
    Tensor4<double> out(z.n, w.n, h, wd);
    for (int in = 0; in < z.n; ++in)
        for (int ic = 0; ic < w.n; ++ic)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < wd; ++x) {
                    double acc = 0.0;
                    for (int oc = 0; oc < w.c; ++oc)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                acc += w.at(ic, oc, dy, dx) * z.at(in, oc, 2 * y + dy, 2 * x + dx);
                    out.at(in, ic, y, x) = acc;
                }
    return out;
}

double dot(const Tensor4<double>& a, const Tensor4<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.v[i] * b.v[i];
    return acc;
}

} // namespace

TEST_CASE("conv2d with an identity kernel is the identity") {
    Rng rng(3);
    TapeD tape;
    auto xt = testutil::random_tensor(2, 1, 8, 8, rng);
    Tensor4<double> wt(1, 1, 3, 3), bt(1, 1, 1, 1);
    wt.at(0, 0, 1, 1) = 1.0;
    auto y = tape.conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt));
    REQUIRE(tape.value(y).v == xt.v);
}

TEST_CASE("conv2d zero padding: all-ones kernel on constant input") {
    TapeD tape;
    Tensor4<double> xt(1, 1, 5, 5), wt(1, 1, 3, 3), bt(1, 1, 1, 1);
    xt.fill(1.0);
    wt.fill(1.0);
    auto y = tape.conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt));
    const auto& out = tape.value(y);
    REQUIRE(out.at(0, 0, 2, 2) == 9.0);
    REQUIRE(out.at(0, 0, 0, 0) == 4.0);
    REQUIRE(out.at(0, 0, 0, 2) == 6.0);
}

TEST_CASE("conv2d matches the six-loop reference", "[oracle]") {
    Rng rng(5);
    for (int rep = 0; rep < 6; ++rep) {
        const int n = 1 + int(rng.uniform_int(2));
        const int ic = 1 + int(rng.uniform_int(3));
        const int oc = 1 + int(rng.uniform_int(4));
        const int k = rep % 2 ? 1 : (rep % 3 ? 3 : 5);
        const int h = 4 + int(rng.uniform_int(5));
        const int w = 4 + int(rng.uniform_int(5));
        auto xt = testutil::random_tensor(n, ic, h, w, rng);
        auto wt = testutil::random_tensor(oc, ic, k, k, rng, 0.5);
        auto bt = testutil::random_tensor(1, oc, 1, 1, rng, 0.2);
        TapeD tape;
        auto y = tape.conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt));
        const auto ref = conv_reference(xt, wt, bt);
        for (std::size_t i = 0; i < ref.size(); ++i)
            REQUIRE(tape.value(y).v[i] == Approx(ref.v[i]).margin(1e-6));
    }
}

TEST_CASE("conv2d rejects bad shapes") {
    TapeD tape;
    Tensor4<double> xt(1, 2, 4, 4), wt(3, 1, 3, 3), bt(1, 3, 1, 1);
    REQUIRE_THROWS_AS(tape.conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt)), data_error);
    Tensor4<double> even(3, 2, 2, 2);
    REQUIRE_THROWS_AS(tape.conv2d(tape.leaf(xt), tape.leaf(even), tape.leaf(bt)), data_error);
}

TEST_CASE("transpose_conv2d: 1x1 input scatters the kernel") {
    Rng rng(7);
    TapeD tape;
    Tensor4<double> xt(1, 1, 1, 1);
    xt.v[0] = 2.5;
    auto wt = testutil::random_tensor(1, 1, 2, 2, rng);
    Tensor4<double> bt(1, 1, 1, 1);
    auto y = tape.transpose_conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt));
    const auto& out = tape.value(y);
    REQUIRE(out.n == 1);
    REQUIRE(out.h == 2);
    REQUIRE(out.w == 2);
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
            REQUIRE(out.at(0, 0, dy, dx) == Approx(2.5 * wt.at(0, 0, dy, dx)));
}

TEST_CASE("transpose_conv2d doubles spatial dims") {
    Rng rng(9);
    TapeD tape;
    auto xt = testutil::random_tensor(2, 3, 5, 7, rng);
    auto wt = testutil::random_tensor(3, 4, 2, 2, rng);
    Tensor4<double> bt(1, 4, 1, 1);
    auto y = tape.transpose_conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt));
    const auto& out = tape.value(y);
    REQUIRE(out.n == 2);
    REQUIRE(out.c == 4);
    REQUIRE(out.h == 10);
    REQUIRE(out.w == 14);
}

TEST_CASE("transpose_conv2d is the adjoint of the stride-2 convolution", "[oracle]") {
    Rng rng(11);
    auto xt = testutil::random_tensor(2, 3, 4, 4, rng);  // (N, IC, H, W)
    auto wt = testutil::random_tensor(3, 5, 2, 2, rng);  // (IC, OC, 2, 2)
    auto zt = testutil::random_tensor(2, 5, 8, 8, rng);  // (N, OC, 2H, 2W)
    Tensor4<double> bt(1, 5, 1, 1);
    TapeD tape;
    auto up = tape.transpose_conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt));
    const double lhs = dot(tape.value(up), zt);
    const double rhs = dot(xt, conv_downsample(zt, wt));
    REQUIRE(lhs == Approx(rhs).epsilon(1e-5));
}

TEST_CASE("maxpool2 picks the max and rejects odd sizes") {
    TapeD tape;
    Tensor4<double> xt(1, 1, 2, 2);
    xt.v = {1.0, 2.0, 3.0, 4.0};
    auto y = tape.maxpool2(tape.leaf(xt));
    REQUIRE(tape.value(y).v[0] == 4.0);

    Tensor4<double> odd(1, 1, 3, 4);
    REQUIRE_THROWS_AS(tape.maxpool2(tape.leaf(odd)), data_error);
}

TEST_CASE("relu clamps negatives to zero") {
    Rng rng(13);
    TapeD tape;
    auto xt = testutil::random_tensor(1, 2, 4, 4, rng);
    auto y = tape.relu(tape.leaf(xt));
    for (std::size_t i = 0; i < xt.size(); ++i) {
        REQUIRE(tape.value(y).v[i] >= 0.0);
        if (xt.v[i] >= 0.0) REQUIRE(tape.value(y).v[i] == xt.v[i]);
    }
}

TEST_CASE("concat_channels adds channel counts and rejects mismatches") {
    Rng rng(15);
    TapeD tape;
    auto a = testutil::random_tensor(2, 3, 4, 4, rng);
    auto b = testutil::random_tensor(2, 5, 4, 4, rng);
    auto y = tape.concat_channels(tape.leaf(a), tape.leaf(b));
    REQUIRE(tape.value(y).c == 8);
    REQUIRE(tape.value(y).at(1, 2, 3, 3) == a.at(1, 2, 3, 3));
    REQUIRE(tape.value(y).at(1, 4, 3, 3) == b.at(1, 1, 3, 3));

    auto c = testutil::random_tensor(2, 1, 8, 4, rng);
    REQUIRE_THROWS_AS(tape.concat_channels(tape.leaf(a), tape.leaf(c)), data_error);
}

TEST_CASE("gradient of sum(x) is all ones") {
    Rng rng(17);
    TapeD tape;
    auto x = tape.leaf(testutil::random_tensor(2, 2, 3, 3, rng), true);
    tape.backward(tape.sum_all(x));
    for (double g : tape.grad(x).v) REQUIRE(g == 1.0);
}

TEST_CASE("frozen inputs accumulate no gradient") {
    Rng rng(19);
    TapeD tape;
    auto frozen = tape.leaf(testutil::random_tensor(1, 1, 4, 4, rng), false);
    nn::Parameter<double> p("w", testutil::random_tensor(1, 1, 4, 4, rng));
    auto w = tape.param(p);
    auto loss = tape.mean_all(tape.mul(frozen, w));
    tape.backward(loss);
    REQUIRE_FALSE(tape.tracks_grad(frozen));
    REQUIRE_THROWS_AS(tape.grad(frozen), data_error);
    double gsum = 0.0;
    for (double g : p.grad.v) gsum += std::fabs(g);
    REQUIRE(gsum > 0.0);
}

TEST_CASE("every primitive passes central finite-difference checks", "[gradcheck]") {
    Rng rng(21);
    const int shapes_per_op = 20;

    const auto weighted_mean = [](TapeD& t, VarD y, std::uint64_t seed) {
        // random fixed projection makes gradient errors visible everywhere
        const auto& v = t.value(y);
        Tensor4<double> w(v.n, v.c, v.h, v.w);
        Rng r(seed);
        for (auto& x : w.v) x = r.normal();
        return t.mean_all(t.mul(y, t.leaf(w)));
    };

    SECTION("conv2d") {
        double worst = 0.0;
        for (int rep = 0; rep < shapes_per_op; ++rep) {
            const int ic = 1 + int(rng.uniform_int(2)), oc = 1 + int(rng.uniform_int(2));
            const int k = rep % 2 ? 3 : 1;
            const int h = 3 + int(rng.uniform_int(3)), w = 3 + int(rng.uniform_int(3));
            std::vector<Tensor4<double>> inputs = {
                testutil::random_tensor(1, ic, h, w, rng),
                testutil::random_tensor(oc, ic, k, k, rng, 0.5),
                testutil::random_tensor(1, oc, 1, 1, rng, 0.2)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.conv2d(v[0], v[1], v[2]), 100 + rep);
                },
                inputs, 5));
        }
        REQUIRE(worst < 1e-4);
    }
    SECTION("transpose_conv2d") {
        double worst = 0.0;
        for (int rep = 0; rep < shapes_per_op; ++rep) {
            const int ic = 1 + int(rng.uniform_int(3)), oc = 1 + int(rng.uniform_int(3));
            const int h = 2 + int(rng.uniform_int(3)), w = 2 + int(rng.uniform_int(3));
            std::vector<Tensor4<double>> inputs = {testutil::random_tensor(1, ic, h, w, rng),
                                                   testutil::random_tensor(ic, oc, 2, 2, rng, 0.5),
                                                   testutil::random_tensor(1, oc, 1, 1, rng, 0.2)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.transpose_conv2d(v[0], v[1], v[2]), 200 + rep);
                },
                inputs, 5));
        }
        REQUIRE(worst < 1e-4);
    }
    SECTION("pooling, relu, concat, blur") {
        double worst = 0.0;
        for (int rep = 0; rep < shapes_per_op; ++rep) {
            const int c = 1 + int(rng.uniform_int(2));
            const int h = 2 * (2 + int(rng.uniform_int(3)));
            std::vector<Tensor4<double>> one = {testutil::random_tensor(1, c, h, h, rng)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.maxpool2(v[0]), 300 + rep);
                },
                one, 5));
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.avgpool2(v[0]), 310 + rep);
                },
                one, 5));
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.relu(v[0]), 320 + rep);
                },
                one, 5));
            const std::vector<double> kernel = {0.25, 0.5, 0.25};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.blur_valid(v[0], kernel), 330 + rep);
                },
                one, 5));
            std::vector<Tensor4<double>> two = {testutil::random_tensor(1, c, h, h, rng),
                                                testutil::random_tensor(1, c + 1, h, h, rng)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.concat_channels(v[0], v[1]), 340 + rep);
                },
                two, 5));
        }
        REQUIRE(worst < 1e-4);
    }
    SECTION("elementwise and reductions") {
        double worst = 0.0;
        for (int rep = 0; rep < shapes_per_op; ++rep) {
            const int h = 2 + int(rng.uniform_int(4));
            std::vector<Tensor4<double>> two = {
                testutil::random_tensor(1, 2, h, h, rng, 0.25, 2.0), // keep div and pow off 0
                testutil::random_tensor(1, 2, h, h, rng, 0.25, 2.0)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    auto z = t.mul(t.add(v[0], v[1]), t.sub(v[0], v[1]));
                    z = t.add(z, t.div(v[0], v[1]));
                    z = t.add(z, t.pow_const(v[0], 1.7));
                    z = t.add(z, t.abs(t.affine(v[1], 2.0, -4.0)));
                    z = t.add(z, t.clamp_min(v[0], 2.0));
                    return t.add(t.mean_all(z), t.mean_all(t.mean_hw(z)));
                },
                two, 6, 1e-6));
        }
        REQUIRE(worst < 1e-4);
    }
    SECTION("fourier bridges") {
        double worst = 0.0;
        for (int rep = 0; rep < shapes_per_op; ++rep) {
            std::vector<Tensor4<double>> img = {testutil::random_tensor(1, 1, 8, 8, rng)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.image_to_spectrum(v[0]), 400 + rep);
                },
                img, 5));
            std::vector<Tensor4<double>> spec = {testutil::random_tensor(1, 2, 8, 8, rng)};
            worst = std::max(worst, testutil::fd_max_rel_error(
                [&](TapeD& t, const std::vector<VarD>& v) {
                    return weighted_mean(t, t.spectrum_to_image(v[0]), 410 + rep);
                },
                spec, 5));
        }
        REQUIRE(worst < 1e-4);
    }
}

TEST_CASE("backward requires a scalar root and a single use") {
    Rng rng(23);
    TapeD tape;
    auto x = tape.leaf(testutil::random_tensor(1, 1, 4, 4, rng), true);
    auto y = tape.relu(x);
    REQUIRE_THROWS_AS(tape.backward(y), data_error);
    auto s = tape.mean_all(y);
    tape.backward(s);
    REQUIRE_THROWS_AS(tape.backward(s), data_error);
}

TEST_CASE("init_conv_weights: zero biases, fan-in std, seeded determinism") {
    {
        auto b = nn::init_bias<double>(16);
        for (double v : b.v) REQUIRE(v == 0.0);
    }
    {
        // fan_in = 64 * 3 * 3 = 576; ~1e5 samples
        Rng rng(111);
        auto w = nn::init_conv_weights<double>(192, 64, 3, rng); // 110592 samples
        double mean = 0.0;
        for (double v : w.v) mean += v;
        mean /= double(w.size());
        double var = 0.0;
        for (double v : w.v) var += (v - mean) * (v - mean);
        var /= double(w.size() - 1);
        const double expected = std::sqrt(2.0 / 576.0);
        REQUIRE(std::sqrt(var) == Approx(expected).epsilon(0.05));
        REQUIRE(std::fabs(mean) < 0.05 * expected);
    }
    {
        Rng a(77), b(77);
        auto wa = nn::init_conv_weights<float>(4, 3, 3, a);
        auto wb = nn::init_conv_weights<float>(4, 3, 3, b);
        REQUIRE(wa.v == wb.v);
    }
}

TEST_CASE("forward passes are bitwise deterministic") {
    Rng rng(25);
    auto xt = testutil::random_tensor(2, 1, 8, 8, rng);
    auto wt = testutil::random_tensor(4, 1, 3, 3, rng);
    auto bt = testutil::random_tensor(1, 4, 1, 1, rng);
    std::vector<double> first;
    for (int run = 0; run < 2; ++run) {
        TapeD tape;
        auto y = tape.maxpool2(tape.relu(tape.conv2d(tape.leaf(xt), tape.leaf(wt), tape.leaf(bt))));
        if (run == 0)
            first = tape.value(y).v;
        else
            REQUIRE(tape.value(y).v == first);
    }
}

TEST_CASE("no NaN/Inf over 1e4 forward/backward cycles", "[soak]") {
    Rng rng(27);
    nn::Parameter<float> w("w", nn::tensor_cast<float>(testutil::random_tensor(2, 1, 3, 3, rng, 0.5)));
    nn::Parameter<float> b("b", nn::Tensor4<float>(1, 2, 1, 1));
    bool all_finite = true;
    for (int cycle = 0; cycle < 10000 && all_finite; ++cycle) {
        nn::Tape<float> tape;
        nn::Tensor4<float> xt(1, 1, 4, 4);
        for (auto& v : xt.v) v = float(rng.uniform(-1.0, 1.0));
        auto y = tape.relu(tape.conv2d(tape.leaf(std::move(xt)), tape.param(w), tape.param(b)));
        auto loss = tape.mean_all(tape.mul(y, y));
        tape.backward(loss);
        all_finite = std::isfinite(tape.value(loss).v[0]) && w.grad.all_finite() && b.grad.all_finite();
        w.zero_grad();
        b.zero_grad();
    }
    REQUIRE(all_finite);
}
