#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "uwbench/error.hpp"
#include "uwbench/model_io.hpp"

using namespace uw::net;

namespace {

WaterNetModel quantised_model(std::uint64_t seed) {
    WaterNetModel m = make_model(uwtest::tiny_arch(), seed);
    quantize_to_float(m);
    return m;
}

}  // namespace

TEST(ModelIo, RoundTripIsBitExact) {
    uwtest::TempDir dir("model");
    const WaterNetModel m = quantised_model(123456789012345ULL);
    save_model(m, dir / "m.uwn");
    const WaterNetModel back = load_model(dir / "m.uwn");
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.rng_seed, 123456789012345ULL);
    const uw::ImageBuf img = uwtest::random_image(6, 5, 1);
    EXPECT_EQ(enhance_image(back, img), enhance_image(m, img));
}

TEST(ModelIo, FileStartsWithMagicAndVersion) {
    const auto bytes = serialize_model(quantised_model(1));
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 6), "UWNET1");
}

TEST(ModelIo, TruncationIsDetected) {
    const auto bytes = serialize_model(quantised_model(1));
    for (std::size_t keep : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + keep);
        EXPECT_THROW(deserialize_model(cut), uw::CorruptionError) << keep;
    }
}

TEST(ModelIo, FlippedByteFailsChecksum) {
    auto bytes = serialize_model(quantised_model(1));
    bytes[bytes.size() / 2] ^= 0x10;
    EXPECT_THROW(deserialize_model(bytes), uw::CorruptionError);
}

TEST(ModelIo, WrongVersionAndMagic) {
    auto bytes = serialize_model(quantised_model(1));
    auto v = bytes;
    v[5] = '2';
    EXPECT_THROW(deserialize_model(v), uw::VersionError);
    auto m = bytes;
    m[0] = 'X';
    EXPECT_THROW(deserialize_model(m), uw::FormatError);
}

TEST(ModelIo, KindsAreNotInterchangeable) {
    EXPECT_THROW(deserialize_extractor(serialize_model(quantised_model(1))), uw::FormatError);
    EXPECT_THROW(deserialize_model(serialize_extractor(random_extractor(1))), uw::FormatError);
}

TEST(ModelIo, ExtractorRoundTrip) {
    uwtest::TempDir dir("model");
    FeatureExtractor fx = random_extractor(4, 6, 7, 5);
    for (auto& s : fx.stages) {
        for (double& v : s.conv.kernel) v = static_cast<float>(v);
        for (double& v : s.conv.bias) v = static_cast<float>(v);
    }
    save_extractor(fx, dir / "fx.uwn");
    EXPECT_EQ(load_extractor(dir / "fx.uwn"), fx);
}

TEST(ModelIo, MissingFileIsIoError) {
    EXPECT_THROW(load_model("/nonexistent/dir/model.uwn"), uw::IoError);
}
