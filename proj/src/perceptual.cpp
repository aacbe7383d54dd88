#include "uwbench/perceptual.hpp"

#include <cmath>
#include <random>
#include <string>

#include "uwbench/error.hpp"

namespace uw::net {

std::vector<Tensor4> FeatureExtractor::activations(const Tensor4& x) const {
    if (tap_index < 0 || tap_index >= static_cast<int>(stages.size())) {
        throw DimensionError("feature extractor tap index out of range");
    }
    std::vector<Tensor4> acts;
    acts.reserve(static_cast<std::size_t>(tap_index) + 1);
    const Tensor4* cur = &x;
    for (int i = 0; i <= tap_index; ++i) {
        const Stage& s = stages[i];
        acts.push_back(s.kind == Stage::Kind::conv ? conv_forward(s.conv, *cur) : maxpool2_forward(*cur));
        cur = &acts.back();
    }
    return acts;
}

Tensor4 FeatureExtractor::features(const Tensor4& x) const { return std::move(activations(x).back()); }

Tensor4 FeatureExtractor::backward(const Tensor4& x, const std::vector<Tensor4>& acts, const Tensor4& grad_tap) const {
    if (acts.size() != static_cast<std::size_t>(tap_index) + 1) {
        throw DimensionError("feature extractor backward: activation list does not match tap");
    }
    Tensor4 g = grad_tap;
    for (int i = tap_index; i >= 0; --i) {
        const Tensor4& in = i == 0 ? x : acts[i - 1];
        const Stage& s = stages[i];
        if (s.kind == Stage::Kind::conv) {
            g = conv_backward(s.conv, in, acts[i], g).grad_x;
        } else {
            g = maxpool2_backward(in, g);
        }
    }
    return g;
}

void validate_extractor(const FeatureExtractor& fx) {
    if (fx.stages.empty()) throw DimensionError("feature extractor has no stages");
    if (fx.tap_index < 0 || fx.tap_index >= static_cast<int>(fx.stages.size())) {
        throw DimensionError("feature extractor tap index out of range");
    }
    int c = 3;
    for (std::size_t i = 0; i < fx.stages.size(); ++i) {
        const auto& s = fx.stages[i];
        if (s.kind != FeatureExtractor::Stage::Kind::conv) continue;
        const ConvLayer& l = s.conv;
        if (l.in_c != c) throw DimensionError("feature extractor stage " + std::to_string(i) + ": channel chain broken");
        if (l.k < 1 || l.k % 2 == 0 ||
            l.kernel.size() != static_cast<std::size_t>(l.out_c) * l.in_c * l.k * l.k ||
            l.bias.size() != static_cast<std::size_t>(l.out_c)) {
            throw DimensionError("feature extractor stage " + std::to_string(i) + ": bad parameter shape");
        }
        c = l.out_c;
    }
}

FeatureExtractor identity_extractor() {
    FeatureExtractor fx;
    FeatureExtractor::Stage s;
    s.conv = ConvLayer(3, 3, 1, Activation::none);
    for (int c = 0; c < 3; ++c) s.conv.kernel[s.conv.kernel_index(c, c, 0, 0)] = 1.0;
    fx.stages.push_back(std::move(s));
    fx.tap_index = 0;
    return fx;
}

FeatureExtractor random_extractor(std::uint64_t seed, int width1, int width2, int kernel) {
    std::mt19937_64 rng(seed);
    FeatureExtractor fx;
    auto conv_stage = [&](int in_c, int out_c) {
        FeatureExtractor::Stage s;
        s.conv = ConvLayer(in_c, out_c, kernel, Activation::relu);
        s.conv.init_gaussian(rng, std::sqrt(2.0 / (in_c * kernel * kernel)), 0.0);
        for (double& v : s.conv.kernel) v = static_cast<float>(v);
        return s;
    };
    fx.stages.push_back(conv_stage(3, width1));
    fx.stages.push_back({FeatureExtractor::Stage::Kind::maxpool, {}});
    fx.stages.push_back(conv_stage(width1, width2));
    fx.tap_index = 2;
    return fx;
}

LossResult perceptual_loss_cached(const FeatureExtractor& fx, const Tensor4& enhanced, const Tensor4& ref_features) {
    const std::vector<Tensor4> acts = fx.activations(enhanced);
    const Tensor4& fe = acts.back();
    if (!fe.same_shape(ref_features)) throw DimensionError("perceptual loss: feature shapes differ");
    const double norm = 1.0 / (static_cast<double>(fe.c()) * fe.h() * fe.w());
    Tensor4 grad_tap(fe.n(), fe.c(), fe.h(), fe.w());
    double loss = 0.0;
    const auto e = fe.data();
    const auto r = ref_features.data();
    auto g = grad_tap.data();
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = e[i] - r[i];
        loss += d * d;
        g[i] = 2.0 * norm * d;
    }
    return {loss * norm, fx.backward(enhanced, acts, grad_tap)};
}

LossResult perceptual_loss(const FeatureExtractor& fx, const Tensor4& enhanced, const Tensor4& reference) {
    if (!enhanced.same_shape(reference)) throw DimensionError("perceptual loss: image shapes differ");
    return perceptual_loss_cached(fx, enhanced, fx.features(reference));
}

LossResult perceptual_loss(const FeatureExtractor& fx, const ImageBuf& enhanced, const ImageBuf& reference) {
    if (!enhanced.same_dims(reference)) throw DimensionError("perceptual loss: image sizes differ");
    return perceptual_loss(fx, to_tensor(enhanced), to_tensor(reference));
}

}  // namespace uw::net
