#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "uwbench/enhance.hpp"
#include "uwbench/error.hpp"

namespace {

uw::ImageBuf constant_rgb(int w, int h, double r, double g, double b) {
    uw::ImageBuf img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    }
    return img;
}

uw::LabImage lab_from_L(int w, int h, const std::vector<double>& L) {
    uw::LabImage lab;
    lab.width = w;
    lab.height = h;
    lab.L = L;
    lab.a.assign(L.size(), 7.0);
    lab.b.assign(L.size(), -3.0);
    return lab;
}

// Clipped-histogram equalisation of one tile, evaluated at L (test-side reimplementation).
double tile_map(const std::vector<double>& tile, double L, double clip_limit, int bins) {
    auto bin = [&](double v) { return std::min(bins - 1, static_cast<int>(std::clamp(v, 0.0, 100.0) / 100.0 * bins)); };
    std::vector<double> h(bins, 0.0);
    for (double v : tile) h[bin(v)] += 1;
    int occupied = 0;
    for (double c : h) occupied += c > 0;
    if (occupied <= 1) return L;
    const double n = static_cast<double>(tile.size());
    const double minclip = std::ceil(n / bins);
    const double clip = minclip + std::round(clip_limit * (n - minclip));
    double excess = 0;
    for (double& c : h) {
        if (c > clip) {
            excess += c - clip;
            c = clip;
        }
    }
    double cdf = 0;
    for (int b = 0; b <= bin(L); ++b) cdf += h[b] + excess / bins;
    return std::min(100.0, cdf * 100.0 / n);
}

}  // namespace

TEST(WhiteBalance, EqualisesChannelMeans) {
    const auto r = uw::white_balance(constant_rgb(4, 3, 0.2, 0.4, 0.6));
    EXPECT_NEAR(r.gains[0], 2.0, 1e-12);
    EXPECT_NEAR(r.gains[1], 1.0, 1e-12);
    EXPECT_NEAR(r.gains[2], 0.4 / 0.6, 1e-12);
    for (double v : r.image.data()) EXPECT_NEAR(v, 0.4, 1e-12);
    EXPECT_FALSE(r.zero_channel);
}

TEST(WhiteBalance, GainsAreClamped) {
    const auto r = uw::white_balance(constant_rgb(2, 2, 0.1, 0.4, 0.7));
    EXPECT_DOUBLE_EQ(r.gains[0], 3.0);  // 4 clamped
    EXPECT_NEAR(r.image.at(0, 0, 0), 0.3, 1e-12);
}

TEST(WhiteBalance, ZeroChannelKeepsUnitGain) {
    const auto r = uw::white_balance(constant_rgb(2, 2, 0.0, 0.3, 0.5));
    EXPECT_TRUE(r.zero_channel);
    EXPECT_DOUBLE_EQ(r.gains[0], 1.0);
    EXPECT_NEAR(r.gains[1], 0.4 / 0.3, 1e-12);
    EXPECT_NEAR(r.gains[2], 0.8, 1e-12);
    EXPECT_THROW(uw::white_balance(uw::ImageBuf(2, 2, 0.0)), uw::InvalidArgument);
}

TEST(WhiteBalance, OutputStaysInRange) {
    const auto r = uw::white_balance(uwtest::random_image(20, 20, 1, 0.0, 0.3));
    for (double v : r.image.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Clahe, HandWorkedClipExample) {
    // n=4, 4 bins: minclip 1, clip 1; hist [3,0,0,1] -> [1,0,0,1] + 0.5 each -> cdf 1.5,2,2.5,4.
    uw::ClaheParams p;
    p.tiles_x = p.tiles_y = 1;
    p.bins = 4;
    const auto out = uw::clahe_l_channel(lab_from_L(2, 2, {10, 10, 10, 90}), p);
    EXPECT_NEAR(out.L[0], 37.5, 1e-12);
    EXPECT_NEAR(out.L[3], 100.0, 1e-12);
}

TEST(Clahe, UnclippedSingleTileIsGlobalEqualisation) {
    uw::ClaheParams p;
    p.tiles_x = p.tiles_y = 1;
    p.clip_limit = 1.0;
    std::mt19937_64 rng(2);
    std::vector<double> L(15 * 11);
    for (double& v : L) v = std::uniform_real_distribution<double>(0, 100)(rng);
    const auto out = uw::clahe_l_channel(lab_from_L(15, 11, L), p);
    auto bin = [](double v) { return std::min(255, static_cast<int>(v / 100.0 * 256)); };
    for (std::size_t i = 0; i < L.size(); ++i) {
        int below = 0;  // brute-force rank
        for (double v : L) below += bin(v) <= bin(L[i]);
        EXPECT_NEAR(out.L[i], 100.0 * below / L.size(), 1e-9);
    }
}

TEST(Clahe, SingleTileMatchesReimplementation) {
    uw::ClaheParams p;
    p.tiles_x = p.tiles_y = 1;
    std::mt19937_64 rng(3);
    std::vector<double> L(30 * 20);
    for (double& v : L) v = 20 + 30 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto out = uw::clahe_l_channel(lab_from_L(30, 20, L), p);
    for (std::size_t i = 0; i < L.size(); ++i) EXPECT_NEAR(out.L[i], tile_map(L, L[i], 0.01, 256), 1e-9);
}

TEST(Clahe, BilinearBlendBetweenTiles) {
    // 8x1 split into two 4-pixel tiles with centres at x = 1.5 and 5.5.
    uw::ClaheParams p;
    p.tiles_x = 2;
    p.tiles_y = 1;
    p.clip_limit = 1.0;
    const std::vector<double> L = {5, 30, 60, 80, 10, 40, 45, 95};
    const auto out = uw::clahe_l_channel(lab_from_L(8, 1, L), p);
    const std::vector<double> t0(L.begin(), L.begin() + 4), t1(L.begin() + 4, L.end());
    for (int x = 0; x < 8; ++x) {
        double want;
        if (x <= 1) {
            want = tile_map(t0, L[x], 1.0, 256);
        } else if (x >= 6) {
            want = tile_map(t1, L[x], 1.0, 256);
        } else {
            const double t = (x - 1.5) / 4.0;
            want = (1 - t) * tile_map(t0, L[x], 1.0, 256) + t * tile_map(t1, L[x], 1.0, 256);
        }
        EXPECT_NEAR(out.L[x], want, 1e-9) << "x=" << x;
    }
}

TEST(Clahe, ConstantImageUnchangedAndChromaUntouched) {
    const auto lab = lab_from_L(9, 9, std::vector<double>(81, 42.0));
    const auto out = uw::clahe_l_channel(lab, {});
    for (std::size_t i = 0; i < 81; ++i) {
        EXPECT_DOUBLE_EQ(out.L[i], 42.0);
        EXPECT_DOUBLE_EQ(out.a[i], 7.0);
        EXPECT_DOUBLE_EQ(out.b[i], -3.0);
    }
}

TEST(Clahe, GridShrinksForTinyImages) {
    const auto r = uw::clahe_on_l(uwtest::random_image(5, 3, 4));
    EXPECT_EQ(r.tiles_x, 5);
    EXPECT_EQ(r.tiles_y, 3);
    EXPECT_TRUE(r.grid_reduced);
    const auto big = uw::clahe_on_l(uwtest::random_image(40, 40, 4));
    EXPECT_FALSE(big.grid_reduced);
}

TEST(Clahe, RejectsBadParameters) {
    uw::ClaheParams p;
    p.clip_limit = 0;
    EXPECT_THROW(uw::clahe_on_l(uw::ImageBuf(4, 4, 0.5), p), uw::InvalidArgument);
}

TEST(Gamma, IsElementwisePower) {
    const uw::ImageBuf img = uwtest::random_image(6, 6, 5);
    const uw::ImageBuf out = uw::gamma_correct(img, 0.7);
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        EXPECT_DOUBLE_EQ(out.data()[i], std::pow(img.data()[i], 0.7));
    }
    EXPECT_THROW(uw::gamma_correct(img, 0.0), uw::InvalidArgument);
}

TEST(GenerateInputs, ShapesAndRawPassThrough) {
    const uw::ImageBuf img = uwtest::random_image(12, 7, 6);
    const auto in = uw::generate_inputs(img);
    EXPECT_EQ(in.raw, img);
    EXPECT_TRUE(in.wb.same_dims(img));
    EXPECT_TRUE(in.he.same_dims(img));
    EXPECT_TRUE(in.gc.same_dims(img));
    EXPECT_EQ(in.wb, uw::white_balance(img).image);
    EXPECT_EQ(in.gc, uw::gamma_correct(img, 0.7));
}
