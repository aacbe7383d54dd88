#include "uwbench/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "uwbench/error.hpp"

namespace uw::net {

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidArgument("batch_size must be positive");
    if (!(lr0 > 0.0)) throw InvalidArgument("lr0 must be positive");
    if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw InvalidArgument("lr_decay must lie in (0,1)");
    if (decay_every < 1) throw InvalidArgument("decay_every must be positive");
    if (max_iters < 1) throw InvalidArgument("max_iters must be positive");
    if (patch < 1) throw InvalidArgument("patch must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
        throw InvalidArgument("Adam hyper-parameters out of range");
    }
}

double learning_rate(const TrainConfig& cfg, long long iter) {
    if (iter < 0) throw InvalidArgument("iteration counter must be non-negative");
    return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(iter / cfg.decay_every));
}

TrainingPair make_training_pair(const ImageBuf& raw, const ImageBuf& reference) {
    if (!raw.same_dims(reference)) throw DimensionError("training pair images differ in size");
    return {generate_inputs(raw), reference};
}

AdamState AdamState::for_model(const WaterNetModel& model) {
    AdamState s;
    for (const ConvLayer* l : model.layers()) {
        s.m_kernel.emplace_back(l->kernel.size(), 0.0);
        s.v_kernel.emplace_back(l->kernel.size(), 0.0);
        s.m_bias.emplace_back(l->bias.size(), 0.0);
        s.v_bias.emplace_back(l->bias.size(), 0.0);
    }
    return s;
}

double train_step(WaterNetModel& model, const FeatureExtractor& fx, std::span<const TrainingPair> batch,
                  const TrainConfig& cfg, long long iter, AdamState& adam) {
    if (batch.empty()) throw InvalidArgument("train_step: empty batch");
    if (static_cast<int>(batch.size()) > cfg.batch_size) {
        throw InvalidArgument("train_step: batch of " + std::to_string(batch.size()) + " exceeds batch_size " +
                              std::to_string(cfg.batch_size));
    }
    std::vector<EnhanceInputs> inputs;
    std::vector<ImageBuf> refs;
    inputs.reserve(batch.size());
    refs.reserve(batch.size());
    for (const auto& p : batch) {
        if (p.reference.width() != cfg.patch || p.reference.height() != cfg.patch) {
            throw DimensionError("train_step: training pairs must be " + std::to_string(cfg.patch) + "x" +
                                 std::to_string(cfg.patch));
        }
        inputs.push_back(p.inputs);
        refs.push_back(p.reference);
    }
    const auto layers = model.layers();
    if (adam.m_kernel.size() != layers.size()) throw InvalidArgument("train_step: optimiser state does not match model");

    const ForwardCache cache = forward_tensors(model, to_input_tensors(inputs));
    const LossResult lr = perceptual_loss(fx, cache.fused, to_tensor(refs));
    if (!std::isfinite(lr.loss)) {
        throw NumericError("train_step: non-finite loss at iteration " + std::to_string(iter));
    }
    const ModelGrads grads = backward(model, cache, lr.grad);
    if (!grads.all_finite()) {
        throw NumericError("train_step: non-finite gradient at iteration " + std::to_string(iter));
    }

    const double rate = learning_rate(cfg, iter);
    const long long t = adam.steps + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    auto update = [&](std::vector<double>& params, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[i] = static_cast<float>(params[i] - rate * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l]->kernel, grads.kernel[l], adam.m_kernel[l], adam.v_kernel[l]);
        update(layers[l]->bias, grads.bias[l], adam.m_bias[l], adam.v_bias[l]);
    }
    adam.steps = t;
    return lr.loss;
}

std::vector<double> train(WaterNetModel& model, const FeatureExtractor& fx, std::span<const TrainingPair> data,
                          const TrainConfig& cfg, const std::function<void(long long, double)>& on_step) {
    cfg.validate();
    if (data.empty()) throw InvalidArgument("train: empty dataset");
    AdamState adam = AdamState::for_model(model);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();
    const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), data.size());

    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(cfg.max_iters));
    std::vector<TrainingPair> batch;
    for (long long iter = 0; iter < cfg.max_iters; ++iter) {
        batch.clear();
        while (batch.size() < bs) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            batch.push_back(data[order[cursor++]]);
        }
        const double loss = train_step(model, fx, batch, cfg, iter, adam);
        losses.push_back(loss);
        if (on_step) on_step(iter, loss);
    }
    return losses;
}

ImageBuf rotate90(const ImageBuf& img) {
    const int w = img.width(), h = img.height();
    ImageBuf out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) out.at(y, w - 1 - x, c) = img.at(x, y, c);
        }
    }
    return out;
}

ImageBuf flip_horizontal(const ImageBuf& img) {
    ImageBuf out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
        }
    }
    return out;
}

std::array<std::pair<ImageBuf, ImageBuf>, 8> augment(const ImageBuf& raw, const ImageBuf& reference) {
    if (raw.width() != raw.height() || !raw.same_dims(reference)) {
        throw DimensionError("augment: images must be square and equally sized");
    }
    std::array<std::pair<ImageBuf, ImageBuf>, 8> out;
    std::pair<ImageBuf, ImageBuf> base{raw, reference};
    for (int flip = 0; flip < 2; ++flip) {
        auto cur = flip ? std::pair{flip_horizontal(raw), flip_horizontal(reference)} : base;
        for (int r = 0; r < 4; ++r) {
            out[static_cast<std::size_t>(flip * 4 + r)] = cur;
            cur = {rotate90(cur.first), rotate90(cur.second)};
        }
    }
    return out;
}

}  // namespace uw::net
