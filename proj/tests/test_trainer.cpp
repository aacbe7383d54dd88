#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "uwbench/error.hpp"
#include "uwbench/synthetic.hpp"
#include "uwbench/trainer.hpp"

using namespace uw::net;

namespace {

std::vector<TrainingPair> tiny_dataset(int n, int size) {
    std::vector<TrainingPair> data;
    for (int i = 0; i < n; ++i) {
        const uw::ImageBuf clean = uw::synthetic_scene(size, size, 40 + i);
        data.push_back(make_training_pair(uw::underwater_cast(clean), clean));
    }
    return data;
}

TrainConfig tiny_config(int patch) {
    TrainConfig c;
    c.batch_size = 2;
    c.max_iters = 4;
    c.patch = patch;
    c.seed = 7;
    return c;
}

}  // namespace

TEST(Trainer, StepDecaySchedule) {
    TrainConfig c;
    EXPECT_DOUBLE_EQ(learning_rate(c, 0), 1e-3);
    EXPECT_DOUBLE_EQ(learning_rate(c, 9999), 1e-3);
    EXPECT_DOUBLE_EQ(learning_rate(c, 10000), 1e-3 * 0.1);
    EXPECT_DOUBLE_EQ(learning_rate(c, 25000), 1e-3 * 0.1 * 0.1);
    EXPECT_THROW(learning_rate(c, -1), uw::InvalidArgument);
}

TEST(Trainer, ConfigValidation) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), uw::InvalidArgument);
    c = {};
    c.lr_decay = 1.0;
    EXPECT_THROW(c.validate(), uw::InvalidArgument);
}

TEST(Trainer, SameSeedSameRun) {
    const auto data = tiny_dataset(3, 12);
    const FeatureExtractor fx = random_extractor(2, 4, 4, 3);
    WaterNetModel a = make_model(uwtest::tiny_arch(), 3), b = a;
    const auto la = train(a, fx, data, tiny_config(12));
    const auto lb = train(b, fx, data, tiny_config(12));
    EXPECT_EQ(la, lb);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, make_model(uwtest::tiny_arch(), 3));
    EXPECT_EQ(la.size(), 4u);
}

TEST(Trainer, ParametersStayOnTheFloatGrid) {
    const auto data = tiny_dataset(2, 8);
    WaterNetModel m = make_model(uwtest::tiny_arch(), 3);
    train(m, identity_extractor(), data, tiny_config(8));
    for (const ConvLayer* l : m.layers()) {
        for (double v : l->kernel) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v)));
    }
}

TEST(Trainer, NonFiniteLossLeavesStateUntouched) {
    auto data = tiny_dataset(1, 8);
    data[0].reference.at(3, 3, 1) = NAN;
    WaterNetModel m = make_model(uwtest::tiny_arch(), 3);
    const WaterNetModel before = m;
    AdamState adam = AdamState::for_model(m);
    EXPECT_THROW(train_step(m, identity_extractor(), data, tiny_config(8), 0, adam), uw::NumericError);
    EXPECT_EQ(m, before);
    EXPECT_EQ(adam.steps, 0);
    for (const auto& v : adam.m_kernel)
        for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(Trainer, RejectsOversizedBatchAndWrongPatch) {
    const auto data = tiny_dataset(3, 8);
    WaterNetModel m = make_model(uwtest::tiny_arch(), 3);
    AdamState adam = AdamState::for_model(m);
    EXPECT_THROW(train_step(m, identity_extractor(), data, tiny_config(8), 0, adam), uw::InvalidArgument);
    EXPECT_THROW(train_step(m, identity_extractor(), std::span(data).first(1), tiny_config(10), 0, adam),
                 uw::DimensionError);
}

TEST(Augment, EightDistinctVariants) {
    const uw::ImageBuf raw = uwtest::random_image(5, 5, 1), ref = uwtest::random_image(5, 5, 2);
    const auto v = augment(raw, ref);
    EXPECT_EQ(v[0].first, raw);
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_NE(v[i].first, v[j].first) << i << " " << j;
    }
    // Every variant is a permutation of the same pixels.
    auto sorted = [](const uw::ImageBuf& img) {
        std::vector<double> d(img.data().begin(), img.data().end());
        std::sort(d.begin(), d.end());
        return d;
    };
    for (const auto& [r, g] : v) {
        EXPECT_EQ(sorted(r), sorted(raw));
        EXPECT_EQ(sorted(g), sorted(ref));
    }
    EXPECT_THROW(augment(uwtest::random_image(4, 5, 1), uwtest::random_image(4, 5, 1)), uw::DimensionError);
}

TEST(Augment, PairsMoveTogetherAndGroupLaws) {
    const uw::ImageBuf img = uwtest::random_image(4, 4, 3);
    const auto v = augment(img, img);
    for (const auto& [r, g] : v) EXPECT_EQ(r, g);
    EXPECT_EQ(rotate90(rotate90(v[2].first)), img);  // rot180 twice
    EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
    EXPECT_EQ(rotate90(rotate90(rotate90(rotate90(img)))), img);
    // Counter-clockwise: the top-right pixel moves to the top-left.
    EXPECT_EQ(rotate90(img).at(0, 0, 0), img.at(3, 0, 0));
}
