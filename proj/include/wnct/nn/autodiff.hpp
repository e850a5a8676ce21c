#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/nn/tensor.hpp"
#include "wnct/spectral/spectrum.hpp"

namespace wnct::nn {

/// Dynamic reverse-mode tape over Tensor4 values. Forward results are
/// computed eagerly as the graph is built; backward() walks the nodes in
/// reverse creation order. A tape is single-use: build, backward, discard.
///
/// Gradients flow only into nodes created with requires_grad (parameters and
/// explicitly-marked leaves); everything downstream of such a node gets a
/// gradient buffer, everything else is skipped entirely.
template <typename T>
class Tape {
public:
    struct Var {
        int id = -1;
    };

    // ---- leaves -----------------------------------------------------------

    Var leaf(Tensor4<T> value, bool requires_grad = false) {
        return push(std::move(value), requires_grad);
    }

    /// Parameter leaf; backward() accumulates into p.grad.
    Var param(Parameter<T>& p) {
        Parameter<T>* ptr = &p;
        Var v = push(p.value, true);
        node(v).backprop = [id = v.id, ptr](Tape& t) {
            const auto& g = t.node_at(id).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ptr->grad.v[i] += g.v[i];
        };
        return v;
    }

    // ---- convolution stack --------------------------------------------------

    /// Zero-padded same-size convolution, odd kernel, stride 1.
    /// x: (N,IC,H,W), w: (OC,IC,K,K), b: (1,OC,1,1).
    Var conv2d(Var x, Var w, Var b) {
        const auto& xv = value(x);
        const auto& wv = value(w);
        const auto& bv = value(b);
        const int k = wv.h;
        require(k == wv.w && k % 2 == 1, "conv2d: kernel must be square with odd size");
        require(wv.c == xv.c, "conv2d: input channel mismatch " + xv.shape_str());
        require(bv.n == 1 && bv.c == wv.n && bv.h == 1 && bv.w == 1, "conv2d: bad bias shape");
        const int n = xv.n, ic = xv.c, h = xv.h, wd = xv.w, oc = wv.n;
        const int pad = (k - 1) / 2;
        const std::size_t plane = std::size_t(h) * wd;
        const int ckk = ic * k * k;

        Tensor4<T> out(n, oc, h, wd);
        {
            auto col = std::make_unique_for_overwrite<T[]>(std::size_t(ckk) * plane);
            for (int in = 0; in < n; ++in) {
                im2col(xv, in, k, pad, col.get());
                gemm(wv.data(), col.get(), out.data() + out.idx(in, 0, 0, 0), oc, ckk,
                     int(plane), false);
            }
            for (int in = 0; in < n; ++in)
                for (int o = 0; o < oc; ++o) {
                    T* dst = out.data() + out.idx(in, o, 0, 0);
                    const T bias = bv.v[std::size_t(o)];
                    for (std::size_t i = 0; i < plane; ++i) dst[i] += bias;
                }
        }

        Var y = push(std::move(out), any_grad({x, w, b}));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, wi = w.id, bi = b.id, yi = y.id, k, pad](Tape& t) {
            const auto& xv = t.node_at(xi).value;
            const auto& wv = t.node_at(wi).value;
            const auto& gy = t.node_at(yi).grad;
            const int n = xv.n, ic = xv.c, h = xv.h, wd = xv.w, oc = wv.n;
            const std::size_t plane = std::size_t(h) * wd;
            const int ckk = ic * k * k;
            if (t.wants_grad(bi)) {
                auto& gb = t.node_at(bi).grad;
                for (int in = 0; in < n; ++in)
                    for (int o = 0; o < oc; ++o) {
                        const T* src = gy.data() + gy.idx(in, o, 0, 0);
                        T acc = 0;
                        for (std::size_t i = 0; i < plane; ++i) acc += src[i];
                        gb.v[std::size_t(o)] += acc;
                    }
            }
            const bool need_w = t.wants_grad(wi);
            const bool need_x = t.wants_grad(xi);
            if (!need_w && !need_x) return;
            auto col = std::make_unique_for_overwrite<T[]>(std::size_t(ckk) * plane);
            auto dcol = need_x ? std::make_unique_for_overwrite<T[]>(std::size_t(ckk) * plane)
                               : nullptr;
            for (int in = 0; in < n; ++in) {
                const T* gy_n = gy.data() + gy.idx(in, 0, 0, 0);
                if (need_w) {
                    im2col(xv, in, k, pad, col.get());
                    // dW += dY * col^T
                    gemm_nt_acc(gy_n, col.get(), t.node_at(wi).grad.data(), oc, int(plane), ckk);
                }
                if (need_x) {
                    // dcol = W^T * dY
                    gemm_tn(wv.data(), gy_n, dcol.get(), ckk, oc, int(plane));
                    col2im_acc(dcol.get(), t.node_at(xi).grad, in, k, pad);
                }
            }
        };
        return y;
    }

    /// 2x2 stride-2 transposed convolution doubling H and W.
    /// x: (N,IC,H,W), w: (IC,OC,2,2), b: (1,OC,1,1).
    Var transpose_conv2d(Var x, Var w, Var b) {
        const auto& xv = value(x);
        const auto& wv = value(w);
        const auto& bv = value(b);
        require(wv.h == 2 && wv.w == 2, "transpose_conv2d: kernel must be 2x2");
        require(wv.n == xv.c, "transpose_conv2d: input channel mismatch");
        require(bv.n == 1 && bv.c == wv.c && bv.h == 1 && bv.w == 1,
                "transpose_conv2d: bad bias shape");
        const int n = xv.n, ic = xv.c, h = xv.h, wd = xv.w, oc = wv.c;
        const std::size_t plane = std::size_t(h) * wd;
        const int oc4 = oc * 4;

        Tensor4<T> out(n, oc, 2 * h, 2 * wd);
        {
            auto patch = std::make_unique_for_overwrite<T[]>(std::size_t(oc4) * plane);
            for (int in = 0; in < n; ++in) {
                // patch (OC*4, H*W) = w^T (OC*4, IC) * x_n (IC, H*W)
                gemm_tn(wv.data(), xv.data() + xv.idx(in, 0, 0, 0), patch.get(), oc4, ic,
                        int(plane));
                scatter_patch(patch.get(), bv, out, in);
            }
        }

        Var y = push(std::move(out), any_grad({x, w, b}));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, wi = w.id, bi = b.id, yi = y.id](Tape& t) {
            const auto& xv = t.node_at(xi).value;
            const auto& wv = t.node_at(wi).value;
            const auto& gy = t.node_at(yi).grad;
            const int n = xv.n, ic = xv.c, h = xv.h, wd = xv.w, oc = wv.c;
            const std::size_t plane = std::size_t(h) * wd;
            const int oc4 = oc * 4;
            if (t.wants_grad(bi)) {
                auto& gb = t.node_at(bi).grad;
                for (int in = 0; in < n; ++in)
                    for (int o = 0; o < oc; ++o) {
                        const T* src = gy.data() + gy.idx(in, o, 0, 0);
                        T acc = 0;
                        for (std::size_t i = 0; i < 4 * plane; ++i) acc += src[i];
                        gb.v[std::size_t(o)] += acc;
                    }
            }
            const bool need_w = t.wants_grad(wi);
            const bool need_x = t.wants_grad(xi);
            if (!need_w && !need_x) return;
            auto dpatch = std::make_unique_for_overwrite<T[]>(std::size_t(oc4) * plane);
            for (int in = 0; in < n; ++in) {
                gather_patch(gy, in, h, wd, oc, dpatch.get());
                if (need_x) {
                    // dX_n (IC, H*W) = w (IC, OC*4) * dpatch (OC*4, H*W)
                    gemm_acc(wv.data(), dpatch.get(),
                             t.node_at(xi).grad.data() + xv.idx(in, 0, 0, 0), ic, oc4,
                             int(plane));
                }
                if (need_w) {
                    // dW (IC, OC*4) += x_n (IC, H*W) * dpatch^T
                    gemm_nt_acc(xv.data() + xv.idx(in, 0, 0, 0), dpatch.get(),
                                t.node_at(wi).grad.data(), ic, int(plane), oc4);
                }
            }
        };
        return y;
    }

    // ---- pooling / activation / concat -------------------------------------

    Var maxpool2(Var x) {
        const auto& xv = value(x);
        require(xv.h % 2 == 0 && xv.w % 2 == 0, "maxpool2: H and W must be even");
        Tensor4<T> out(xv.n, xv.c, xv.h / 2, xv.w / 2);
        std::vector<std::int64_t> argmax(out.size());
        std::size_t o = 0;
        for (int in = 0; in < xv.n; ++in)
            for (int ch = 0; ch < xv.c; ++ch)
                for (int y = 0; y < xv.h; y += 2)
                    for (int xx = 0; xx < xv.w; xx += 2) {
                        std::size_t best = xv.idx(in, ch, y, xx);
                        T bv = xv.v[best];
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const std::size_t i = xv.idx(in, ch, y + dy, xx + dx);
                                if (xv.v[i] > bv) {
                                    bv = xv.v[i];
                                    best = i;
                                }
                            }
                        out.v[o] = bv;
                        argmax[o] = std::int64_t(best);
                        ++o;
                    }
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id, am = std::move(argmax)](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            for (std::size_t i = 0; i < gy.size(); ++i) gx.v[std::size_t(am[i])] += gy.v[i];
        };
        return y;
    }

    Var avgpool2(Var x) {
        const auto& xv = value(x);
        require(xv.h % 2 == 0 && xv.w % 2 == 0, "avgpool2: H and W must be even");
        Tensor4<T> out(xv.n, xv.c, xv.h / 2, xv.w / 2);
        std::size_t o = 0;
        for (int in = 0; in < xv.n; ++in)
            for (int ch = 0; ch < xv.c; ++ch)
                for (int y = 0; y < xv.h; y += 2)
                    for (int xx = 0; xx < xv.w; xx += 2)
                        out.v[o++] = T(0.25) * (xv.at(in, ch, y, xx) + xv.at(in, ch, y, xx + 1) +
                                                xv.at(in, ch, y + 1, xx) +
                                                xv.at(in, ch, y + 1, xx + 1));
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            std::size_t o = 0;
            for (int in = 0; in < gx.n; ++in)
                for (int ch = 0; ch < gx.c; ++ch)
                    for (int y2 = 0; y2 < gx.h; y2 += 2)
                        for (int x2 = 0; x2 < gx.w; x2 += 2) {
                            const T g = T(0.25) * gy.v[o++];
                            gx.at(in, ch, y2, x2) += g;
                            gx.at(in, ch, y2, x2 + 1) += g;
                            gx.at(in, ch, y2 + 1, x2) += g;
                            gx.at(in, ch, y2 + 1, x2 + 1) += g;
                        }
        };
        return y;
    }

    Var relu(Var x) {
        const auto& xv = value(x);
        Tensor4<T> out(xv.n, xv.c, xv.h, xv.w);
        for (std::size_t i = 0; i < xv.size(); ++i) out.v[i] = xv.v[i] > T(0) ? xv.v[i] : T(0);
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& xv = t.node_at(xi).value;
            const auto& gy = t.node_at(yi).grad;
            for (std::size_t i = 0; i < gy.size(); ++i)
                if (xv.v[i] > T(0)) gx.v[i] += gy.v[i];
        };
        return y;
    }

    Var concat_channels(Var a, Var b) {
        const auto& av = value(a);
        const auto& bv = value(b);
        require(av.n == bv.n && av.h == bv.h && av.w == bv.w,
                "concat_channels: N/H/W mismatch " + av.shape_str() + " vs " + bv.shape_str());
        Tensor4<T> out(av.n, av.c + bv.c, av.h, av.w);
        const std::size_t pa = std::size_t(av.c) * av.h * av.w;
        const std::size_t pb = std::size_t(bv.c) * bv.h * bv.w;
        for (int in = 0; in < av.n; ++in) {
            std::copy_n(av.data() + in * pa, pa, out.data() + std::size_t(in) * (pa + pb));
            std::copy_n(bv.data() + in * pb, pb, out.data() + std::size_t(in) * (pa + pb) + pa);
        }
        Var y = push(std::move(out), any_grad({a, b}));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [ai = a.id, bi = b.id, yi = y.id, pa, pb](Tape& t) {
            const auto& gy = t.node_at(yi).grad;
            for (int in = 0; in < gy.n; ++in) {
                const T* src = gy.data() + std::size_t(in) * (pa + pb);
                if (t.wants_grad(ai)) {
                    T* dst = t.node_at(ai).grad.data() + in * pa;
                    for (std::size_t i = 0; i < pa; ++i) dst[i] += src[i];
                }
                if (t.wants_grad(bi)) {
                    T* dst = t.node_at(bi).grad.data() + in * pb;
                    const T* srcb = src + pa;
                    for (std::size_t i = 0; i < pb; ++i) dst[i] += srcb[i];
                }
            }
        };
        return y;
    }

    /// Separable valid-mode correlation with a fixed symmetric 1D window,
    /// applied per channel plane. Output is (H-L+1, W-L+1).
    Var blur_valid(Var x, std::vector<T> kernel) {
        const auto& xv = value(x);
        const int L = int(kernel.size());
        require(L >= 1 && L % 2 == 1, "blur_valid: kernel length must be odd");
        require(xv.h >= L && xv.w >= L, "blur_valid: plane smaller than kernel");
        const int oh = xv.h - L + 1, ow = xv.w - L + 1;
        Tensor4<T> out(xv.n, xv.c, oh, ow);
        std::vector<T> tmp(std::size_t(xv.h) * ow);
        for (int in = 0; in < xv.n; ++in)
            for (int ch = 0; ch < xv.c; ++ch) {
                const T* src = xv.data() + xv.idx(in, ch, 0, 0);
                for (int y = 0; y < xv.h; ++y)
                    for (int ox = 0; ox < ow; ++ox) {
                        T acc = 0;
                        for (int t = 0; t < L; ++t) acc += kernel[std::size_t(t)] * src[y * xv.w + ox + t];
                        tmp[std::size_t(y) * ow + ox] = acc;
                    }
                T* dst = out.data() + out.idx(in, ch, 0, 0);
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        T acc = 0;
                        for (int t = 0; t < L; ++t) acc += kernel[std::size_t(t)] * tmp[std::size_t(oy + t) * ow + ox];
                        dst[oy * ow + ox] = acc;
                    }
            }
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id, k = std::move(kernel)](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            const int L = int(k.size());
            const int h = gx.h, w = gx.w, oh = gy.h, ow = gy.w;
            std::vector<T> dtmp(std::size_t(h) * ow);
            for (int in = 0; in < gx.n; ++in)
                for (int ch = 0; ch < gx.c; ++ch) {
                    std::fill(dtmp.begin(), dtmp.end(), T(0));
                    const T* gsrc = gy.data() + gy.idx(in, ch, 0, 0);
                    for (int oy = 0; oy < oh; ++oy)
                        for (int t = 0; t < L; ++t) {
                            const T kv = k[std::size_t(t)];
                            T* drow = dtmp.data() + std::size_t(oy + t) * ow;
                            const T* grow = gsrc + std::size_t(oy) * ow;
                            for (int ox = 0; ox < ow; ++ox) drow[ox] += kv * grow[ox];
                        }
                    T* gdst = gx.data() + gx.idx(in, ch, 0, 0);
                    for (int y = 0; y < h; ++y)
                        for (int ox = 0; ox < ow; ++ox) {
                            const T g = dtmp[std::size_t(y) * ow + ox];
                            if (g == T(0)) continue;
                            for (int t = 0; t < L; ++t) gdst[y * w + ox + t] += k[std::size_t(t)] * g;
                        }
                }
        };
        return y;
    }

    // ---- elementwise --------------------------------------------------------

    Var add(Var a, Var b) { return binary(a, b, [](T x, T y) { return x + y; }, BinKind::add); }
    Var sub(Var a, Var b) { return binary(a, b, [](T x, T y) { return x - y; }, BinKind::sub); }
    Var mul(Var a, Var b) { return binary(a, b, [](T x, T y) { return x * y; }, BinKind::mul); }
    Var div(Var a, Var b) { return binary(a, b, [](T x, T y) { return x / y; }, BinKind::div); }

    Var affine(Var x, T scale, T shiftv) {
        const auto& xv = value(x);
        Tensor4<T> out(xv.n, xv.c, xv.h, xv.w);
        for (std::size_t i = 0; i < xv.size(); ++i) out.v[i] = scale * xv.v[i] + shiftv;
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id, scale](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            for (std::size_t i = 0; i < gy.size(); ++i) gx.v[i] += scale * gy.v[i];
        };
        return y;
    }

    /// x^e elementwise; values must be strictly positive.
    Var pow_const(Var x, T e) {
        const auto& xv = value(x);
        Tensor4<T> out(xv.n, xv.c, xv.h, xv.w);
        for (std::size_t i = 0; i < xv.size(); ++i) {
            require(xv.v[i] > T(0), "pow_const: base must be positive");
            out.v[i] = std::pow(xv.v[i], e);
        }
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id, e](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& xv = t.node_at(xi).value;
            const auto& yv = t.node_at(yi).value;
            const auto& gy = t.node_at(yi).grad;
            for (std::size_t i = 0; i < gy.size(); ++i)
                gx.v[i] += gy.v[i] * e * yv.v[i] / xv.v[i];
        };
        return y;
    }

    /// Lower clamp. Non-finite inputs also map to the floor, so a diverged
    /// network cannot crash the loss graph before the trainer's
    /// finite-loss guard sees the blowup (the L1 term still carries it).
    Var clamp_min(Var x, T floor) {
        const auto& xv = value(x);
        Tensor4<T> out(xv.n, xv.c, xv.h, xv.w);
        for (std::size_t i = 0; i < xv.size(); ++i) out.v[i] = xv.v[i] >= floor ? xv.v[i] : floor;
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id, floor](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& xv = t.node_at(xi).value;
            const auto& gy = t.node_at(yi).grad;
            for (std::size_t i = 0; i < gy.size(); ++i)
                if (xv.v[i] >= floor) gx.v[i] += gy.v[i];
        };
        return y;
    }

    Var abs(Var x) {
        const auto& xv = value(x);
        Tensor4<T> out(xv.n, xv.c, xv.h, xv.w);
        for (std::size_t i = 0; i < xv.size(); ++i) out.v[i] = std::fabs(xv.v[i]);
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& xv = t.node_at(xi).value;
            const auto& gy = t.node_at(yi).grad;
            for (std::size_t i = 0; i < gy.size(); ++i) {
                const T s = xv.v[i] > T(0) ? T(1) : (xv.v[i] < T(0) ? T(-1) : T(0));
                gx.v[i] += s * gy.v[i];
            }
        };
        return y;
    }

    // ---- reductions ---------------------------------------------------------

    Var sum_all(Var x) {
        const auto& xv = value(x);
        Tensor4<T> out(1, 1, 1, 1);
        T acc = 0;
        for (T v : xv.v) acc += v;
        out.v[0] = acc;
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const T g = t.node_at(yi).grad.v[0];
            for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] += g;
        };
        return y;
    }

    Var mean_all(Var x) {
        const T inv = T(1) / T(value(x).size());
        return affine(sum_all(x), inv, T(0));
    }

    /// Per-plane spatial mean: (N,C,H,W) -> (N,C,1,1).
    Var mean_hw(Var x) {
        const auto& xv = value(x);
        Tensor4<T> out(xv.n, xv.c, 1, 1);
        const std::size_t plane = std::size_t(xv.h) * xv.w;
        const T inv = T(1) / T(plane);
        for (int in = 0; in < xv.n; ++in)
            for (int ch = 0; ch < xv.c; ++ch) {
                const T* src = xv.data() + xv.idx(in, ch, 0, 0);
                T acc = 0;
                for (std::size_t i = 0; i < plane; ++i) acc += src[i];
                out.at(in, ch, 0, 0) = acc * inv;
            }
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            const std::size_t plane = std::size_t(gx.h) * gx.w;
            const T inv = T(1) / T(plane);
            for (int in = 0; in < gx.n; ++in)
                for (int ch = 0; ch < gx.c; ++ch) {
                    const T g = gy.at(in, ch, 0, 0) * inv;
                    T* dst = gx.data() + gx.idx(in, ch, 0, 0);
                    for (std::size_t i = 0; i < plane; ++i) dst[i] += g;
                }
        };
        return y;
    }

    // ---- Fourier bridges ----------------------------------------------------

    /// (N,1,H,W) image -> (N,2,H,W) DC-centered orthonormal spectrum packed
    /// as real/imaginary channels. A fixed linear map, differentiated exactly.
    Var image_to_spectrum(Var x) {
        const auto& xv = value(x);
        require(xv.c == 1, "image_to_spectrum: expected a single channel");
        require(spectral::is_pow2(xv.h) && spectral::is_pow2(xv.w) && xv.h == xv.w,
                "image_to_spectrum: needs square power-of-two planes");
        Tensor4<T> out(xv.n, 2, xv.h, xv.w);
        const std::size_t plane = std::size_t(xv.h) * xv.w;
        for (int in = 0; in < xv.n; ++in) {
            auto spec = spectral::shift(
                spectral::fft2_plane(xv.data() + xv.idx(in, 0, 0, 0), xv.h, xv.w));
            T* re = out.data() + out.idx(in, 0, 0, 0);
            T* im = out.data() + out.idx(in, 1, 0, 0);
            for (std::size_t i = 0; i < plane; ++i) {
                re[i] = spec.v[i].real();
                im[i] = spec.v[i].imag();
            }
        }
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            const std::size_t plane = std::size_t(gx.h) * gx.w;
            std::vector<T> real_part(plane);
            for (int in = 0; in < gx.n; ++in) {
                spectral::Spectrum<T> cot(gx.h, gx.w);
                cot.dc_centered = true;
                const T* re = gy.data() + gy.idx(in, 0, 0, 0);
                const T* im = gy.data() + gy.idx(in, 1, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) cot.v[i] = std::complex<T>(re[i], im[i]);
                // adjoint of (shift o fft2) is ifft2 o unshift, real part
                spectral::ifft2_plane(spectral::shift(cot), real_part.data());
                T* dst = gx.data() + gx.idx(in, 0, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) dst[i] += real_part[i];
            }
        };
        return y;
    }

    /// (N,2,H,W) DC-centered spectrum -> (N,1,H,W) real image (real part of
    /// the inverse transform). Reports the worst |imag| left behind, which a
    /// network output spectrum has no obligation to keep small.
    Var spectrum_to_image(Var x, T* max_imag_residual = nullptr) {
        const auto& xv = value(x);
        require(xv.c == 2, "spectrum_to_image: expected exactly 2 channels");
        require(spectral::is_pow2(xv.h) && spectral::is_pow2(xv.w) && xv.h == xv.w,
                "spectrum_to_image: needs square power-of-two planes");
        Tensor4<T> out(xv.n, 1, xv.h, xv.w);
        const std::size_t plane = std::size_t(xv.h) * xv.w;
        T worst = 0;
        for (int in = 0; in < xv.n; ++in) {
            spectral::Spectrum<T> spec(xv.h, xv.w);
            spec.dc_centered = true;
            const T* re = xv.data() + xv.idx(in, 0, 0, 0);
            const T* im = xv.data() + xv.idx(in, 1, 0, 0);
            for (std::size_t i = 0; i < plane; ++i) spec.v[i] = std::complex<T>(re[i], im[i]);
            const T resid =
                spectral::ifft2_plane(spectral::shift(spec), out.data() + out.idx(in, 0, 0, 0));
            worst = std::max(worst, resid);
        }
        if (max_imag_residual) *max_imag_residual = worst;
        Var y = push(std::move(out), wants_grad(x.id));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [xi = x.id, yi = y.id](Tape& t) {
            if (!t.wants_grad(xi)) return;
            auto& gx = t.node_at(xi).grad;
            const auto& gy = t.node_at(yi).grad;
            const std::size_t plane = std::size_t(gx.h) * gx.w;
            for (int in = 0; in < gx.n; ++in) {
                auto spec = spectral::shift(
                    spectral::fft2_plane(gy.data() + gy.idx(in, 0, 0, 0), gx.h, gx.w));
                T* re = gx.data() + gx.idx(in, 0, 0, 0);
                T* im = gx.data() + gx.idx(in, 1, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) {
                    re[i] += spec.v[i].real();
                    im[i] += spec.v[i].imag();
                }
            }
        };
        return y;
    }

    // ---- access / backward --------------------------------------------------

    const Tensor4<T>& value(Var v) const { return node_at(v.id).value; }
    const Tensor4<T>& grad(Var v) const {
        require(node_at(v.id).requires_grad, "grad: node does not track gradients");
        return node_at(v.id).grad;
    }
    bool tracks_grad(Var v) const { return node_at(v.id).requires_grad; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Reverse pass from a scalar root. Single use per tape.
    void backward(Var root) {
        auto& r = node_at(root.id);
        require(r.value.size() == 1, "backward: root must be a scalar");
        require(r.requires_grad, "backward: root does not depend on any tracked input");
        require(!ran_backward_, "backward: tape already consumed");
        ran_backward_ = true;
        r.grad.v[0] = T(1);
        for (int id = root.id; id >= 0; --id) {
            auto& nd = nodes_[std::size_t(id)];
            if (nd.requires_grad && nd.backprop) nd.backprop(*this);
        }
    }

private:
    enum class BinKind { add, sub, mul, div };

    struct Node {
        Tensor4<T> value;
        Tensor4<T> grad;
        bool requires_grad = false;
        std::function<void(Tape&)> backprop;
    };

    std::vector<Node> nodes_;
    bool ran_backward_ = false;

    Node& node(Var v) { return nodes_[std::size_t(v.id)]; }
    Node& node_at(int id) { return nodes_[std::size_t(id)]; }
    const Node& node_at(int id) const { return nodes_[std::size_t(id)]; }

    bool wants_grad(int id) const { return nodes_[std::size_t(id)].requires_grad; }

    bool any_grad(std::initializer_list<Var> vs) const {
        for (Var v : vs)
            if (wants_grad(v.id)) return true;
        return false;
    }

    Var push(Tensor4<T> value, bool requires_grad) {
        Node nd;
        nd.requires_grad = requires_grad;
        if (requires_grad) nd.grad = Tensor4<T>(value.n, value.c, value.h, value.w);
        nd.value = std::move(value);
        nodes_.push_back(std::move(nd));
        return Var{int(nodes_.size()) - 1};
    }

    template <typename Fn>
    Var binary(Var a, Var b, Fn f, BinKind kind) {
        const auto& av = value(a);
        const auto& bv = value(b);
        require(av.same_shape(bv),
                "elementwise op: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
        Tensor4<T> out(av.n, av.c, av.h, av.w);
        for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = f(av.v[i], bv.v[i]);
        Var y = push(std::move(out), any_grad({a, b}));
        if (!node(y).requires_grad) return y;
        node(y).backprop = [ai = a.id, bi = b.id, yi = y.id, kind](Tape& t) {
            const auto& gy = t.node_at(yi).grad;
            const auto& av = t.node_at(ai).value;
            const auto& bv = t.node_at(bi).value;
            const bool ga = t.wants_grad(ai), gb = t.wants_grad(bi);
            auto* gav = ga ? t.node_at(ai).grad.v.data() : nullptr;
            auto* gbv = gb ? t.node_at(bi).grad.v.data() : nullptr;
            for (std::size_t i = 0; i < gy.size(); ++i) {
                const T g = gy.v[i];
                switch (kind) {
                    case BinKind::add:
                        if (ga) gav[i] += g;
                        if (gb) gbv[i] += g;
                        break;
                    case BinKind::sub:
                        if (ga) gav[i] += g;
                        if (gb) gbv[i] -= g;
                        break;
                    case BinKind::mul:
                        if (ga) gav[i] += g * bv.v[i];
                        if (gb) gbv[i] += g * av.v[i];
                        break;
                    case BinKind::div:
                        if (ga) gav[i] += g / bv.v[i];
                        if (gb) gbv[i] -= g * av.v[i] / (bv.v[i] * bv.v[i]);
                        break;
                }
            }
        };
        return y;
    }

    // ---- GEMM + layout kernels ---------------------------------------------

    using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MapM = Eigen::Map<RowMat>;
    using MapC = Eigen::Map<const RowMat>;

    /// C = A (m x k) * B (k x n); accumulate adds instead of overwriting.
    static void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
        MapC am(a, m, k);
        MapC bm(b, k, n);
        MapM cm(c, m, n);
        if (acc)
            cm.noalias() += am * bm;
        else
            cm.noalias() = am * bm;
    }
    static void gemm_acc(const T* a, const T* b, T* c, int m, int k, int n) {
        gemm(a, b, c, m, k, n, true);
    }
    /// C (m x n) += A (m x k) * B^T, B given as (n x k).
    static void gemm_nt_acc(const T* a, const T* b, T* c, int m, int k, int n) {
        MapC am(a, m, k);
        MapC bm(b, n, k);
        MapM cm(c, m, n);
        cm.noalias() += am * bm.transpose();
    }
    /// C (m x n) = A^T * B, A given as (k x m).
    static void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n) {
        MapC am(a, k, m);
        MapC bm(b, k, n);
        MapM cm(c, m, n);
        cm.noalias() = am.transpose() * bm;
    }

    static void im2col(const Tensor4<T>& x, int item, int k, int pad, T* col) {
        const int ic = x.c, h = x.h, w = x.w;
        std::size_t row = 0;
        for (int ch = 0; ch < ic; ++ch)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    T* dst = col + row * std::size_t(h) * w;
                    const int sy = ky - pad, sx = kx - pad;
                    for (int y = 0; y < h; ++y) {
                        const int yy = y + sy;
                        if (yy < 0 || yy >= h) {
                            std::fill(dst + std::size_t(y) * w, dst + std::size_t(y + 1) * w, T(0));
                            continue;
                        }
                        const T* src = x.data() + x.idx(item, ch, yy, 0);
                        T* drow = dst + std::size_t(y) * w;
                        for (int xx = 0; xx < w; ++xx) {
                            const int xs = xx + sx;
                            drow[xx] = (xs < 0 || xs >= w) ? T(0) : src[xs];
                        }
                    }
                    ++row;
                }
    }

    static void col2im_acc(const T* col, Tensor4<T>& gx, int item, int k, int pad) {
        const int ic = gx.c, h = gx.h, w = gx.w;
        std::size_t row = 0;
        for (int ch = 0; ch < ic; ++ch)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    const T* src = col + row * std::size_t(h) * w;
                    const int sy = ky - pad, sx = kx - pad;
                    for (int y = 0; y < h; ++y) {
                        const int yy = y + sy;
                        if (yy < 0 || yy >= h) continue;
                        T* dst = gx.data() + gx.idx(item, ch, yy, 0);
                        const T* srow = src + std::size_t(y) * w;
                        for (int xx = 0; xx < w; ++xx) {
                            const int xs = xx + sx;
                            if (xs >= 0 && xs < w) dst[xs] += srow[xx];
                        }
                    }
                    ++row;
                }
    }

    /// patch (OC*4, H*W) + bias -> out item planes (OC, 2H, 2W).
    static void scatter_patch(const T* patch, const Tensor4<T>& bias, Tensor4<T>& out, int item) {
        const int oc = out.c, oh = out.h, ow = out.w;
        const int h = oh / 2, w = ow / 2;
        const std::size_t plane = std::size_t(h) * w;
        for (int o = 0; o < oc; ++o) {
            const T bv = bias.v[std::size_t(o)];
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const T* src = patch + (std::size_t(o) * 4 + dy * 2 + dx) * plane;
                    for (int y = 0; y < h; ++y) {
                        T* dst = out.data() + out.idx(item, o, 2 * y + dy, dx);
                        for (int xx = 0; xx < w; ++xx) dst[2 * xx] = src[std::size_t(y) * w + xx] + bv;
                    }
                }
        }
    }

    /// Reverse of scatter_patch (no bias): gy item planes -> dpatch.
    static void gather_patch(const Tensor4<T>& gy, int item, int h, int w, int oc, T* dpatch) {
        const std::size_t plane = std::size_t(h) * w;
        for (int o = 0; o < oc; ++o)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    T* dst = dpatch + (std::size_t(o) * 4 + dy * 2 + dx) * plane;
                    for (int y = 0; y < h; ++y) {
                        const T* src = gy.data() + gy.idx(item, o, 2 * y + dy, dx);
                        for (int xx = 0; xx < w; ++xx) dst[std::size_t(y) * w + xx] = src[2 * xx];
                    }
                }
    }
};

} // namespace wnct::nn
