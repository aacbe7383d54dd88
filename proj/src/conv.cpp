#include "uwbench/conv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>
#include <limits>
#include <string>

#include "uwbench/error.hpp"

namespace uw::net {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::none: return "none";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

ConvLayer::ConvLayer(int in_channels, int out_channels, int kernel_size, Activation activation)
    : in_c(in_channels), out_c(out_channels), k(kernel_size), act(activation) {
    if (in_c < 1 || out_c < 1) throw InvalidArgument("conv layer needs at least one channel each way");
    if (k < 1 || k % 2 == 0) throw InvalidArgument("conv kernel size must be odd, got " + std::to_string(k));
    kernel.assign(static_cast<std::size_t>(out_c) * in_c * k * k, 0.0);
    bias.assign(static_cast<std::size_t>(out_c), 0.0);
}

void ConvLayer::init_gaussian(std::mt19937_64& rng, double stddev, double bias_value) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& w : kernel) w = dist(rng);
    std::fill(bias.begin(), bias.end(), bias_value);
}

namespace {

void check_input(const ConvLayer& layer, const Tensor4& x) {
    if (x.c() != layer.in_c) {
        throw DimensionError("conv: input has " + std::to_string(x.c()) + " channels, layer expects " +
                             std::to_string(layer.in_c));
    }
    if (layer.kernel.size() != static_cast<std::size_t>(layer.out_c) * layer.in_c * layer.k * layer.k ||
        layer.bias.size() != static_cast<std::size_t>(layer.out_c)) {
        throw DimensionError("conv: parameter arrays do not match layer shape");
    }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

// Direct convolution on zero-padded row bands. The inner kernels are register-blocked
// with GCC vector types and built twice (AVX2 and baseline) with a runtime switch.
// Neither build contracts to FMA, so both give bit-identical results.
namespace {

#pragma GCC diagnostic ignored "-Wpsabi"
typedef double v4d __attribute__((vector_size(32)));

inline __attribute__((always_inline)) v4d load4(const double* p) {
    v4d v;
    std::memcpy(&v, p, sizeof v);
    return v;
}
inline __attribute__((always_inline)) void store4(double* p, const v4d& v) { std::memcpy(p, &v, sizeof v); }
inline __attribute__((always_inline)) v4d splat(double d) { return v4d{d, d, d, d}; }

int round_up(int v, int m) { return (v + m - 1) / m * m; }

bool have_avx2() {
    static const bool yes = __builtin_cpu_supports("avx2");
    return yes;
}

// Rows [r0 - pad, r1 + pad) of one sample, zero-padded left/right/top/bottom.
struct Band {
    int rows = 0;
    int stride = 0;
    std::vector<double> data;  // channels x rows x stride
    const double* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * rows * stride; }
};

void fill_band(const Tensor4& x, int n, int r0, int r1, int pad, int stride, Band& band) {
    const int H = x.h(), W = x.w();
    band.rows = r1 - r0 + 2 * pad;
    band.stride = stride;
    band.data.resize(static_cast<std::size_t>(x.c()) * band.rows * stride);
    for (int c = 0; c < x.c(); ++c) {
        const double* src = x.plane_ptr(n, c);
        double* dst = band.data.data() + static_cast<std::size_t>(c) * band.rows * stride;
        for (int b = 0; b < band.rows; ++b) {
            double* row = dst + static_cast<std::size_t>(b) * stride;
            const int r = r0 - pad + b;
            if (r < 0 || r >= H) {
                std::fill(row, row + stride, 0.0);
                continue;
            }
            std::fill(row, row + pad, 0.0);
            std::copy(src + static_cast<std::size_t>(r) * W, src + static_cast<std::size_t>(r + 1) * W, row + pad);
            std::fill(row + pad + W, row + stride, 0.0);
        }
    }
}

// Four output channels over `rows` output rows, tiles of 8 columns. wpk is [i][ky][kx][4].
inline __attribute__((always_inline)) void block4_body(const Band& band, int in_c, int k, const double* wpk,
                                                       int rows, int wt, double* out) {
    const std::size_t oplane = static_cast<std::size_t>(rows) * wt;
    const std::size_t iplane = static_cast<std::size_t>(band.rows) * band.stride;
    for (int r = 0; r < rows; ++r) {
        for (int x = 0; x < wt; x += 8) {
            v4d a0 = splat(0.0), a1 = a0, b0 = a0, b1 = a0, c0 = a0, c1 = a0, d0 = a0, d1 = a0;
            const double* w = wpk;
            for (int i = 0; i < in_c; ++i) {
                const double* base = band.data.data() + i * iplane + static_cast<std::size_t>(r) * band.stride + x;
                for (int ky = 0; ky < k; ++ky) {
                    const double* src = base + static_cast<std::size_t>(ky) * band.stride;
                    for (int kx = 0; kx < k; ++kx, w += 4) {
                        const v4d s0 = load4(src + kx), s1 = load4(src + kx + 4);
                        const v4d w0 = splat(w[0]), w1 = splat(w[1]), w2 = splat(w[2]), w3 = splat(w[3]);
                        a0 += w0 * s0;
                        a1 += w0 * s1;
                        b0 += w1 * s0;
                        b1 += w1 * s1;
                        c0 += w2 * s0;
                        c1 += w2 * s1;
                        d0 += w3 * s0;
                        d1 += w3 * s1;
                    }
                }
            }
            double* o = out + static_cast<std::size_t>(r) * wt + x;
            store4(o, a0);
            store4(o + 4, a1);
            store4(o + oplane, b0);
            store4(o + oplane + 4, b1);
            store4(o + 2 * oplane, c0);
            store4(o + 2 * oplane + 4, c1);
            store4(o + 3 * oplane, d0);
            store4(o + 3 * oplane + 4, d1);
        }
    }
}

__attribute__((target("avx2"))) void block4_avx2(const Band& band, int in_c, int k, const double* wpk, int rows,
                                                 int wt, double* out) {
    block4_body(band, in_c, k, wpk, rows, wt, out);
}
void block4_base(const Band& band, int in_c, int k, const double* wpk, int rows, int wt, double* out) {
    block4_body(band, in_c, k, wpk, rows, wt, out);
}

// dW[ky][kx0 .. kx0+NK) for one (output, input) channel pair; g has row stride wt with a zero tail.
template <int NK>
inline __attribute__((always_inline)) void wgrad_body(const double* xin, int stride, const double* g, int rows,
                                                      int wt, int kx0, int ky, double* dw) {
    v4d acc[NK];
    for (int j = 0; j < NK; ++j) acc[j] = splat(0.0);
    for (int r = 0; r < rows; ++r) {
        const double* gr = g + static_cast<std::size_t>(r) * wt;
        const double* src = xin + static_cast<std::size_t>(r + ky) * stride + kx0;
        for (int x = 0; x < wt; x += 4) {
            const v4d gv = load4(gr + x);
#pragma GCC unroll 8
            for (int j = 0; j < NK; ++j) acc[j] += gv * load4(src + x + j);
        }
    }
    for (int j = 0; j < NK; ++j) dw[j] += (acc[j][0] + acc[j][1]) + (acc[j][2] + acc[j][3]);
}

template <int NK>
__attribute__((target("avx2"))) void wgrad_avx2(const double* xin, int stride, const double* g, int rows, int wt,
                                               int kx0, int ky, double* dw) {
    wgrad_body<NK>(xin, stride, g, rows, wt, kx0, ky, dw);
}
template <int NK>
void wgrad_base(const double* xin, int stride, const double* g, int rows, int wt, int kx0, int ky, double* dw) {
    wgrad_body<NK>(xin, stride, g, rows, wt, kx0, ky, dw);
}

using WgradFn = void (*)(const double*, int, const double*, int, int, int, int, double*);

template <int... N>
WgradFn pick_wgrad(int nk, bool avx2, std::integer_sequence<int, N...>) {
    WgradFn fn = nullptr;
    ((nk == N + 1 ? (fn = avx2 ? &wgrad_avx2<N + 1> : &wgrad_base<N + 1>) : fn), ...);
    return fn;
}

// Output rows per band: keeps the padded copy near 8 MB.
int band_rows(int channels, int stride) {
    constexpr std::size_t kBudget = std::size_t{1} << 20;
    const std::size_t per_row = static_cast<std::size_t>(channels) * stride;
    return static_cast<int>(std::clamp<std::size_t>(kBudget / std::max<std::size_t>(per_row, 1), 8, 1 << 20));
}

// Raw (pre-bias, pre-activation) correlation of x with the layer kernel, written
// to `emit(o, r, row_ptr)` one output row at a time.
template <class Emit>
void correlate(const ConvLayer& layer, const Tensor4& x, Emit&& emit) {
    const int H = x.h(), W = x.w(), k = layer.k, pad = (k - 1) / 2;
    const int wt = round_up(W, 8);
    const int stride = wt + 2 * pad;
    const int blocks = (layer.out_c + 3) / 4;
    const int kk = k * k;

    std::vector<double> wpk(static_cast<std::size_t>(blocks) * layer.in_c * kk * 4, 0.0);
    for (int o = 0; o < layer.out_c; ++o) {
        for (int i = 0; i < layer.in_c; ++i) {
            for (int t = 0; t < kk; ++t) {
                wpk[((static_cast<std::size_t>(o / 4) * layer.in_c + i) * kk + t) * 4 + o % 4] =
                    layer.kernel[(static_cast<std::size_t>(o) * layer.in_c + i) * kk + t];
            }
        }
    }
    const auto kernel = have_avx2() ? &block4_avx2 : &block4_base;
    const int step = std::min(H, band_rows(layer.in_c, stride));
    Band band;
    std::vector<double> out;
    for (int n = 0; n < x.n(); ++n) {
        for (int r0 = 0; r0 < H; r0 += step) {
            const int r1 = std::min(H, r0 + step), rows = r1 - r0;
            fill_band(x, n, r0, r1, pad, stride, band);
            out.resize(static_cast<std::size_t>(4) * rows * wt);
            for (int b = 0; b < blocks; ++b) {
                kernel(band, layer.in_c, k, wpk.data() + static_cast<std::size_t>(b) * layer.in_c * kk * 4, rows, wt,
                       out.data());
                for (int c = 0; c < 4 && 4 * b + c < layer.out_c; ++c) {
                    for (int r = 0; r < rows; ++r) {
                        emit(n, 4 * b + c, r0 + r, out.data() + (static_cast<std::size_t>(c) * rows + r) * wt);
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor4 conv_forward(const ConvLayer& layer, const Tensor4& x) {
    check_input(layer, x);
    const int W = x.w();
    Tensor4 y(x.n(), layer.out_c, x.h(), W);
    correlate(layer, x, [&](int n, int o, int r, const double* src) {
        double* dst = y.plane_ptr(n, o) + static_cast<std::size_t>(r) * W;
        const double b = layer.bias[o];
        switch (layer.act) {
            case Activation::none:
                for (int q = 0; q < W; ++q) dst[q] = src[q] + b;
                break;
            case Activation::relu:
                for (int q = 0; q < W; ++q) {
                    const double v = src[q] + b;
                    dst[q] = v > 0.0 ? v : 0.0;
                }
                break;
            case Activation::sigmoid:
                for (int q = 0; q < W; ++q) dst[q] = sigmoid(src[q] + b);
                break;
        }
    });
    return y;
}

ConvGrads conv_backward(const ConvLayer& layer, const Tensor4& x, const Tensor4& grad_out) {
    return conv_backward(layer, x, conv_forward(layer, x), grad_out);
}

ConvGrads conv_backward(const ConvLayer& layer, const Tensor4& x, const Tensor4& y, const Tensor4& grad_out,
                        bool need_grad_x) {
    check_input(layer, x);
    if (grad_out.n() != x.n() || grad_out.c() != layer.out_c || grad_out.h() != x.h() || grad_out.w() != x.w() ||
        !grad_out.same_shape(y)) {
        throw DimensionError("conv_backward: gradient shape does not match layer output");
    }
    const int H = x.h(), W = x.w(), k = layer.k, pad = (k - 1) / 2, kk = k * k;

    // Gradient with respect to the pre-activation.
    Tensor4 g = grad_out;
    {
        auto gd = g.data();
        const auto yd = y.data();
        switch (layer.act) {
            case Activation::none: break;
            case Activation::relu:
                for (std::size_t p = 0; p < gd.size(); ++p) gd[p] = yd[p] > 0.0 ? gd[p] : 0.0;
                break;
            case Activation::sigmoid:
                for (std::size_t p = 0; p < gd.size(); ++p) gd[p] *= yd[p] * (1.0 - yd[p]);
                break;
        }
    }

    ConvGrads grads{Tensor4(), std::vector<double>(layer.kernel.size(), 0.0),
                    std::vector<double>(layer.bias.size(), 0.0)};
    for (int n = 0; n < x.n(); ++n) {
        for (int o = 0; o < layer.out_c; ++o) {
            const double* go = g.plane_ptr(n, o);
            double sum = 0.0;
            for (std::size_t p = 0; p < g.plane(); ++p) sum += go[p];
            grads.grad_bias[o] += sum;
        }
    }

    // Kernel gradient: correlate each input band with the matching rows of g.
    const int wt = round_up(W, 4);
    const int stride = wt + 2 * pad;
    const bool avx2 = have_avx2();
    const int step = std::min(H, band_rows(layer.in_c, stride));
    Band band;
    std::vector<double> gband;
    for (int n = 0; n < x.n(); ++n) {
        for (int r0 = 0; r0 < H; r0 += step) {
            const int r1 = std::min(H, r0 + step), rows = r1 - r0;
            fill_band(x, n, r0, r1, pad, stride, band);
            gband.resize(static_cast<std::size_t>(layer.out_c) * rows * wt);
            for (int o = 0; o < layer.out_c; ++o) {
                for (int r = 0; r < rows; ++r) {
                    const double* src = g.plane_ptr(n, o) + static_cast<std::size_t>(r0 + r) * W;
                    double* dst = gband.data() + (static_cast<std::size_t>(o) * rows + r) * wt;
                    std::copy(src, src + W, dst);
                    std::fill(dst + W, dst + wt, 0.0);
                }
            }
            for (int o = 0; o < layer.out_c; ++o) {
                const double* go = gband.data() + static_cast<std::size_t>(o) * rows * wt;
                for (int i = 0; i < layer.in_c; ++i) {
                    double* dw = grads.grad_kernel.data() + (static_cast<std::size_t>(o) * layer.in_c + i) * kk;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx0 = 0; kx0 < k; kx0 += 8) {
                            const int nk = std::min(8, k - kx0);
                            const WgradFn fn = pick_wgrad(nk, avx2, std::make_integer_sequence<int, 8>{});
                            fn(band.channel(i), stride, go, rows, wt, kx0, ky, dw + ky * k + kx0);
                        }
                    }
                }
            }
        }
    }

    // Input gradient: a correlation of g with the flipped, transposed kernel.
    if (need_grad_x) {
        ConvLayer flipped(layer.out_c, layer.in_c, k, Activation::none);
        for (int o = 0; o < layer.out_c; ++o) {
            for (int i = 0; i < layer.in_c; ++i) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        flipped.kernel[flipped.kernel_index(i, o, k - 1 - ky, k - 1 - kx)] =
                            layer.kernel[layer.kernel_index(o, i, ky, kx)];
                    }
                }
            }
        }
        grads.grad_x = conv_forward(flipped, g);
    }
    return grads;
}

Tensor4 maxpool2_forward(const Tensor4& x) {
    const int H = x.h() / 2, W = x.w() / 2;
    if (H < 1 || W < 1) throw DimensionError("maxpool2: input smaller than 2x2");
    Tensor4 y(x.n(), x.c(), H, W);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int r = 0; r < H; ++r) {
                for (int q = 0; q < W; ++q) {
                    double m = x.at(n, c, 2 * r, 2 * q);
                    m = std::max(m, x.at(n, c, 2 * r, 2 * q + 1));
                    m = std::max(m, x.at(n, c, 2 * r + 1, 2 * q));
                    m = std::max(m, x.at(n, c, 2 * r + 1, 2 * q + 1));
                    y.at(n, c, r, q) = m;
                }
            }
        }
    }
    return y;
}

Tensor4 maxpool2_backward(const Tensor4& x, const Tensor4& grad_out) {
    const int H = x.h() / 2, W = x.w() / 2;
    if (grad_out.n() != x.n() || grad_out.c() != x.c() || grad_out.h() != H || grad_out.w() != W) {
        throw DimensionError("maxpool2_backward: gradient shape mismatch");
    }
    Tensor4 gx(x.n(), x.c(), x.h(), x.w());
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int r = 0; r < H; ++r) {
                for (int q = 0; q < W; ++q) {
                    // First maximum in scan order receives the gradient.
                    int br = 2 * r, bq = 2 * q;
                    double best = x.at(n, c, br, bq);
                    for (int dr = 0; dr < 2; ++dr) {
                        for (int dq = 0; dq < 2; ++dq) {
                            const double v = x.at(n, c, 2 * r + dr, 2 * q + dq);
                            if (v > best) {
                                best = v;
                                br = 2 * r + dr;
                                bq = 2 * q + dq;
                            }
                        }
                    }
                    gx.at(n, c, br, bq) += grad_out.at(n, c, r, q);
                }
            }
        }
    }
    return gx;
}

Tensor4 softmax_channels(const Tensor4& logits) {
    Tensor4 p(logits.n(), logits.c(), logits.h(), logits.w());
    for (int n = 0; n < logits.n(); ++n) {
        for (std::size_t i = 0; i < logits.plane(); ++i) {
            double m = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < logits.c(); ++c) m = std::max(m, logits.plane_ptr(n, c)[i]);
            double sum = 0.0;
            for (int c = 0; c < logits.c(); ++c) {
                const double e = std::exp(logits.plane_ptr(n, c)[i] - m);
                p.plane_ptr(n, c)[i] = e;
                sum += e;
            }
            for (int c = 0; c < logits.c(); ++c) p.plane_ptr(n, c)[i] /= sum;
        }
    }
    return p;
}

Tensor4 softmax_channels_backward(const Tensor4& probs, const Tensor4& grad_probs) {
    if (!probs.same_shape(grad_probs)) throw DimensionError("softmax backward: shape mismatch");
    Tensor4 g(probs.n(), probs.c(), probs.h(), probs.w());
    for (int n = 0; n < probs.n(); ++n) {
        for (std::size_t i = 0; i < probs.plane(); ++i) {
            double dot = 0.0;
            for (int c = 0; c < probs.c(); ++c) dot += probs.plane_ptr(n, c)[i] * grad_probs.plane_ptr(n, c)[i];
            for (int c = 0; c < probs.c(); ++c) {
                g.plane_ptr(n, c)[i] = probs.plane_ptr(n, c)[i] * (grad_probs.plane_ptr(n, c)[i] - dot);
            }
        }
    }
    return g;
}

}  // namespace uw::net
