#pragma once

#include <cstdint>
#include <vector>

#include "uwbench/conv.hpp"
#include "uwbench/image.hpp"
#include "uwbench/tensor.hpp"

namespace uw::net {

// Frozen feature network: a sequence of convolutions and 2x2 max-pool stages. The
// activation after stage `tap_index` is the feature map compared by the loss.
struct FeatureExtractor {
    struct Stage {
        enum class Kind : std::int32_t { conv = 0, maxpool = 1 };
        Kind kind = Kind::conv;
        ConvLayer conv;  // unused for maxpool

        friend bool operator==(const Stage&, const Stage&) = default;
    };

    std::vector<Stage> stages;
    int tap_index = 0;

    // Feature map at the tap.
    Tensor4 features(const Tensor4& x) const;
    // All stage outputs up to and including the tap.
    std::vector<Tensor4> activations(const Tensor4& x) const;
    // Gradient w.r.t. x of <grad_tap, features(x)>.
    Tensor4 backward(const Tensor4& x, const std::vector<Tensor4>& acts, const Tensor4& grad_tap) const;

    friend bool operator==(const FeatureExtractor&, const FeatureExtractor&) = default;
};

// Throws DimensionError if the stages do not chain or the tap is out of range.
void validate_extractor(const FeatureExtractor& fx);

// Single 1x1 identity convolution: the loss becomes a plain pixel-space distance.
FeatureExtractor identity_extractor();

// Seeded random frozen stack: conv(3->w1) relu, maxpool, conv(w1->w2) relu; He-scaled init.
FeatureExtractor random_extractor(std::uint64_t seed, int width1 = 8, int width2 = 16, int kernel = 3);

struct LossResult {
    double loss = 0.0;
    Tensor4 grad;  // d loss / d enhanced, same shape as the enhanced batch
};

// (1 / (C*H*W)) * sum over the batch of the squared L2 distance between tap features.
LossResult perceptual_loss(const FeatureExtractor& fx, const Tensor4& enhanced, const Tensor4& reference);
// Precomputed reference features (frozen network, so they can be cached across steps).
LossResult perceptual_loss_cached(const FeatureExtractor& fx, const Tensor4& enhanced, const Tensor4& ref_features);
LossResult perceptual_loss(const FeatureExtractor& fx, const ImageBuf& enhanced, const ImageBuf& reference);

}  // namespace uw::net
