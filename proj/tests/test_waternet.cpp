#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "uwbench/error.hpp"
#include "uwbench/waternet.hpp"

using namespace uw::net;

namespace {

Tensor4 constant(int c, double v) { return Tensor4(1, c, 3, 4, v); }

}  // namespace

TEST(Fusion, OneHotMapSelectsThatBranch) {
    const Tensor4 r0 = uwtest::random_tensor(1, 3, 3, 4, 1), r1 = uwtest::random_tensor(1, 3, 3, 4, 2),
                  r2 = uwtest::random_tensor(1, 3, 3, 4, 3);
    for (int k = 0; k < kBranches; ++k) {
        Tensor4 maps(1, 3, 3, 4);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x) maps.at(0, k, y, x) = 1.0;
        const Tensor4 f = fuse(maps, {&r0, &r1, &r2});
        const Tensor4& want = k == 0 ? r0 : (k == 1 ? r1 : r2);
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f.data()[i], want.data()[i], 1e-12);
    }
}

TEST(Fusion, EqualMapsAverageTheBranches) {
    const Tensor4 a = constant(3, 0.3), b = constant(3, 0.6), c = constant(3, 0.9);
    const Tensor4 f = fuse(constant(3, 1.0 / 3.0), {&a, &b, &c});
    for (double v : f.data()) EXPECT_NEAR(v, 0.6, 1e-12);
}

TEST(Fusion, RejectsMismatchedShapes) {
    const Tensor4 a = constant(3, 0.3), small(1, 3, 2, 2);
    EXPECT_THROW(fuse(constant(3, 0.2), {&a, &a, &small}), uw::DimensionError);
}

TEST(WaterNet, ConfidenceMapsSumToOne) {
    const WaterNetModel m = make_model(uwtest::tiny_arch(), 4);
    const auto out = forward(m, uw::generate_inputs(uwtest::random_image(9, 6, 1)));
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 9; ++x) {
            double s = 0;
            for (int k = 0; k < kBranches; ++k) {
                EXPECT_GE(out.maps.at(0, k, y, x), 0.0);
                s += out.maps.at(0, k, y, x);
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
}

TEST(WaterNet, ShapesFollowTheInput) {
    const WaterNetModel m = make_model(uwtest::tiny_arch(), 4);
    for (auto [w, h] : std::vector<std::pair<int, int>>{{1, 1}, {7, 3}, {16, 9}}) {
        const auto out = forward(m, uw::generate_inputs(uwtest::random_image(w, h, 2)));
        EXPECT_EQ(out.enhanced.width(), w);
        EXPECT_EQ(out.enhanced.height(), h);
        for (const auto& r : out.refined) EXPECT_EQ(r.width(), w);
    }
}

TEST(WaterNet, LeanForwardMatchesTrainingForward) {
    const WaterNetModel m = make_model(uwtest::tiny_arch(), 5);
    const auto in = uw::generate_inputs(uwtest::random_image(11, 8, 3));
    const auto lean = forward(m, in);
    const ForwardCache cache = forward_tensors(m, to_input_tensors(std::vector<uw::EnhanceInputs>{in}));
    EXPECT_EQ(lean.enhanced, to_image(cache.fused));
    EXPECT_EQ(lean.maps, cache.maps);
    for (int k = 0; k < kBranches; ++k) EXPECT_EQ(lean.refined[k], to_image(cache.refined(k)));
}

TEST(WaterNet, DefaultArchitectureValidates) {
    const WaterNetModel m = make_model(ArchConfig{}, 0);
    EXPECT_NO_THROW(validate_model(m));
    EXPECT_EQ(m.trunk.size(), 7u);
    EXPECT_EQ(m.trunk.front().in_c, 12);
    EXPECT_EQ(m.head.out_c, 3);
    for (const auto& branch : m.ftu) {
        EXPECT_EQ(branch.front().in_c, 6);
        EXPECT_EQ(branch.back().act, Activation::sigmoid);
    }
    WaterNetModel broken = m;
    broken.head.in_c = 5;
    EXPECT_THROW(validate_model(broken), uw::DimensionError);
}

TEST(WaterNet, SameSeedSameWeights) {
    EXPECT_EQ(make_model(uwtest::tiny_arch(), 9), make_model(uwtest::tiny_arch(), 9));
    EXPECT_NE(make_model(uwtest::tiny_arch(), 9), make_model(uwtest::tiny_arch(), 10));
}

TEST(WaterNetGradient, EndToEndMatchesFiniteDifferences) {
    const auto r = uwtest::check_waternet_end_to_end(1);
    EXPECT_LT(r.worst, 1e-5);
    EXPECT_GT(r.checked, 1000);
    EXPECT_LT(r.skipped, r.checked / 10);
}
