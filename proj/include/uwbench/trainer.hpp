#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "uwbench/enhance.hpp"
#include "uwbench/perceptual.hpp"
#include "uwbench/waternet.hpp"

namespace uw::net {

struct TrainConfig {
    int batch_size = 16;
    double lr0 = 1e-3;
    // Step decay: lr = lr0 * lr_decay^floor(iter / decay_every).
    double lr_decay = 0.1;
    long long decay_every = 10000;
    long long max_iters = 10000;
    int patch = 112;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    // Throws InvalidArgument when a field is out of range.
    void validate() const;
};

double learning_rate(const TrainConfig& cfg, long long iter);

struct TrainingPair {
    EnhanceInputs inputs;
    ImageBuf reference;
};

TrainingPair make_training_pair(const ImageBuf& raw, const ImageBuf& reference);

// First and second moment estimates, laid out like WaterNetModel::layers().
struct AdamState {
    std::vector<std::vector<double>> m_kernel, v_kernel, m_bias, v_bias;
    long long steps = 0;

    static AdamState for_model(const WaterNetModel& model);
};

// One Adam update on the batch. Returns the loss before the update. A non-finite loss or
// gradient throws NumericError and leaves the model and optimiser state untouched.
double train_step(WaterNetModel& model, const FeatureExtractor& fx, std::span<const TrainingPair> batch,
                  const TrainConfig& cfg, long long iter, AdamState& adam);

// Runs cfg.max_iters steps, drawing batches from a seeded reshuffle of the dataset.
// The callback (if any) receives (iter, loss) after each step.
std::vector<double> train(WaterNetModel& model, const FeatureExtractor& fx, std::span<const TrainingPair> data,
                          const TrainConfig& cfg,
                          const std::function<void(long long, double)>& on_step = {});

ImageBuf rotate90(const ImageBuf& img);  // counter-clockwise
ImageBuf flip_horizontal(const ImageBuf& img);

// The original plus seven flip/rotation variants, the same transform applied to both images.
// Order: rotations 0/90/180/270 of the original, then of its horizontal mirror.
std::array<std::pair<ImageBuf, ImageBuf>, 8> augment(const ImageBuf& raw, const ImageBuf& reference);

}  // namespace uw::net
