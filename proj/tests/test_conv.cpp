#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "uwbench/conv.hpp"

using uw::net::Activation;
using uw::net::ConvLayer;
using uw::net::Tensor4;

namespace {

// Textbook zero-padded convolution.
Tensor4 naive_conv(const ConvLayer& L, const Tensor4& x) {
    Tensor4 y(x.n(), L.out_c, x.h(), x.w());
    const int p = (L.k - 1) / 2;
    for (int n = 0; n < x.n(); ++n)
        for (int o = 0; o < L.out_c; ++o)
            for (int r = 0; r < x.h(); ++r)
                for (int q = 0; q < x.w(); ++q) {
                    double s = L.bias[o];
                    for (int i = 0; i < L.in_c; ++i)
                        for (int ky = 0; ky < L.k; ++ky)
                            for (int kx = 0; kx < L.k; ++kx) {
                                const int yy = r + ky - p, xx = q + kx - p;
                                if (yy < 0 || xx < 0 || yy >= x.h() || xx >= x.w()) continue;
                                s += L.kernel[L.kernel_index(o, i, ky, kx)] * x.at(n, i, yy, xx);
                            }
                    if (L.act == Activation::relu) s = std::max(0.0, s);
                    if (L.act == Activation::sigmoid) s = 1.0 / (1.0 + std::exp(-s));
                    y.at(n, o, r, q) = s;
                }
    return y;
}

}  // namespace

TEST(Conv, OnesKernelCountsNeighbours) {
    ConvLayer L(1, 1, 3, Activation::none);
    std::fill(L.kernel.begin(), L.kernel.end(), 1.0);
    const Tensor4 y = uw::net::conv_forward(L, Tensor4(1, 1, 3, 3, 1.0));
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 4.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 1), 6.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 1, 1), 9.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 2, 2), 4.0);
}

TEST(Conv, CentreTapIsIdentity) {
    ConvLayer L(3, 3, 5, Activation::none);
    for (int c = 0; c < 3; ++c) L.kernel[L.kernel_index(c, c, 2, 2)] = 1.0;
    const Tensor4 x = uwtest::random_tensor(2, 3, 7, 9, 1);
    EXPECT_EQ(uw::net::conv_forward(L, x), x);
}

TEST(Conv, ReluOfNegativeIsZero) {
    ConvLayer L(1, 2, 1, Activation::relu);
    L.kernel = {-1.0, 1.0};
    const Tensor4 y = uw::net::conv_forward(L, Tensor4(1, 1, 2, 2, 3.0));
    EXPECT_EQ(y.at(0, 0, 1, 1), 0.0);
    EXPECT_EQ(y.at(0, 1, 1, 1), 3.0);
}

TEST(Conv, MatchesNaiveReferenceOnAwkwardShapes) {
    std::mt19937_64 rng(11);
    const int shapes[][5] = {{1, 1, 1, 1, 1}, {3, 5, 3, 7, 13}, {12, 32, 7, 9, 11}, {6, 3, 5, 20, 3}, {32, 32, 3, 17, 31}};
    const Activation acts[] = {Activation::none, Activation::relu, Activation::sigmoid};
    int i = 0;
    for (const auto& s : shapes) {
        ConvLayer L(s[0], s[1], s[2], acts[i % 3]);
        L.init_gaussian(rng, 0.3, 0.1);
        const Tensor4 x = uwtest::random_tensor(2, s[0], s[3], s[4], 100 + i);
        const Tensor4 got = uw::net::conv_forward(L, x), want = naive_conv(L, x);
        for (std::size_t j = 0; j < got.size(); ++j) ASSERT_NEAR(got.data()[j], want.data()[j], 1e-11);
        ++i;
    }
}

TEST(Conv, BiasGradientIsSumOfOutputGradient) {
    std::mt19937_64 rng(3);
    ConvLayer L(2, 2, 3, Activation::none);
    L.init_gaussian(rng, 0.2);
    const Tensor4 g = uwtest::random_tensor(2, 2, 4, 6, 4);
    const auto grads = uw::net::conv_backward(L, uwtest::random_tensor(2, 2, 4, 6, 5), g);
    for (int o = 0; o < 2; ++o) {
        double s = 0;
        for (int n = 0; n < 2; ++n)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 6; ++x) s += g.at(n, o, y, x);
        EXPECT_NEAR(grads.grad_bias[o], s, 1e-12);
    }
}

TEST(Conv, ZeroOutputGradientGivesZeroGradients) {
    std::mt19937_64 rng(3);
    ConvLayer L(3, 4, 3, Activation::sigmoid);
    L.init_gaussian(rng, 0.2);
    const auto g = uw::net::conv_backward(L, uwtest::random_tensor(1, 3, 5, 5, 1), Tensor4(1, 4, 5, 5));
    for (double v : g.grad_x.data()) EXPECT_EQ(v, 0.0);
    for (double v : g.grad_kernel) EXPECT_EQ(v, 0.0);
    for (double v : g.grad_bias) EXPECT_EQ(v, 0.0);
}

TEST(ConvGradient, MatchesFiniteDifferences) {
    for (Activation a : {Activation::none, Activation::relu, Activation::sigmoid}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto r = uwtest::check_conv_layer(a, seed);
            EXPECT_LT(r.worst, 1e-5) << uw::net::to_string(a) << " seed " << seed;
            EXPECT_GT(r.checked, 100);
        }
    }
}

TEST(MaxPool, ForwardAndOddEdges) {
    Tensor4 x(1, 1, 3, 5);
    for (int i = 0; i < 15; ++i) x.data()[i] = i % 7;
    const Tensor4 y = uw::net::maxpool2_forward(x);
    ASSERT_EQ(y.h(), 1);
    ASSERT_EQ(y.w(), 2);
    EXPECT_EQ(y.at(0, 0, 0, 0), 6.0);  // {0,1,5,6}
    EXPECT_EQ(y.at(0, 0, 0, 1), 3.0);  // {2,3,0,1}
}

TEST(MaxPool, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto r = uwtest::check_maxpool(seed);
        EXPECT_LT(r.worst, 1e-5);
        EXPECT_GT(r.checked, 40);
    }
}

TEST(Softmax, SumsToOneAndGradientMatches) {
    const Tensor4 p = uw::net::softmax_channels(uwtest::random_tensor(2, 3, 4, 4, 9, 50.0));
    for (int n = 0; n < 2; ++n)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) EXPECT_NEAR(p.at(n, 0, y, x) + p.at(n, 1, y, x) + p.at(n, 2, y, x), 1.0, 1e-12);
    EXPECT_TRUE(p.all_finite());
    const auto r = uwtest::check_softmax(5);
    EXPECT_LT(r.worst, 1e-5);
}
